#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "xtx/env.hpp"

using namespace xtx;

namespace {

GameSpec basic_spec() {
  GameSpec s;
  s.depth = 4;
  s.branching = 3;
  s.bottleneck_positions = {1, 3};
  s.deadend_positions = {2};
  s.rewards = {{2, 5.0}, {4, 10.0}};
  s.seed = 7;
  return s;
}

// Exhaustive search over the reachable state space, driving the environment
// only through its public stepping interface.
struct SearchOutcome {
  double best_return = -1e300;
  int min_steps_to_finish = -1;
};

SearchOutcome brute_force(const GameSpec& spec, int step_cap) {
  struct Node {
    Environment env;
    StepResult last;
    int steps;
  };
  SearchOutcome out;
  std::set<std::pair<int, double>> seen;
  std::queue<Node> q;
  Environment root(spec);
  StepResult first = root.reset();
  seen.insert({root.position(), root.score()});
  q.push(Node{std::move(root), std::move(first), 0});
  while (!q.empty()) {
    Node n = std::move(q.front());
    q.pop();
    if (n.last.done) {
      out.best_return = std::max(out.best_return, n.env.score());
      if (out.min_steps_to_finish < 0 || n.steps < out.min_steps_to_finish)
        out.min_steps_to_finish = n.steps;
      continue;
    }
    if (n.steps >= step_cap) continue;
    for (const auto& a : n.last.valid_actions) {
      Node child{n.env, {}, n.steps + 1};
      child.last = child.env.step(a);
      auto key = std::make_pair(child.env.position(), child.env.score());
      if (child.last.done || seen.insert(key).second) q.push(std::move(child));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("vocab reserves pad and sep and round-trips text") {
  Vocab v;
  CHECK(v.id("<pad>") == kPadToken);
  CHECK(v.id("<sep>") == kSepToken);
  int f = v.add("torch");
  CHECK(f == 2);
  CHECK(v.add("torch") == 2);  // idempotent
  v.add("lit");
  auto toks = v.tokenize("torch lit torch <sep>");
  CHECK(toks == std::vector<int>{2, 3, 2, 1});
  CHECK(v.text(toks) == "torch lit torch <sep>");
  CHECK_THROWS_AS(v.id("unheard"), std::invalid_argument);
  CHECK_THROWS_AS(v.text(std::vector<int>{99}), std::invalid_argument);
}

TEST_CASE("spec validation names the offending field") {
  auto expect_bad = [](GameSpec s, const char* what) {
    CAPTURE(what);
    CHECK_THROWS_AS(Environment{s}, std::invalid_argument);
  };
  GameSpec ok = basic_spec();
  CHECK_NOTHROW(Environment{ok});

  GameSpec s = ok;
  s.depth = 0;
  expect_bad(s, "depth");
  s = ok;
  s.branching = 0;
  expect_bad(s, "branching low");
  s = ok;
  s.branching = 33;
  expect_bad(s, "branching high");
  s = ok;
  s.bottleneck_positions = {4};
  expect_bad(s, "bottleneck range");
  s = ok;
  s.deadend_positions = {-1};
  expect_bad(s, "deadend range");
  s = ok;
  s.branching = 1;
  s.bottleneck_positions.clear();
  s.deadend_positions = {0};
  expect_bad(s, "deadend needs decoy room");
  s = ok;
  s.rewards.clear();
  expect_bad(s, "rewards empty");
  s = ok;
  s.rewards = {{0, 1.0}};
  expect_bad(s, "reward position zero");
  s = ok;
  s.rewards = {{5, 1.0}};
  expect_bad(s, "reward past goal");
  s = ok;
  s.stochastic = true;
  s.p_slip = 1.0;
  expect_bad(s, "p_slip one");
  s = ok;
  s.stochastic = true;
  s.p_slip = -0.1;
  expect_bad(s, "p_slip negative");
  s = ok;
  s.stochastic = true;
  s.distractor_rate = 1.5;
  expect_bad(s, "distractor_rate high");
  s = ok;
  s.p_slip = 0.1;  // stochastic left false
  expect_bad(s, "stochastic flag required");
}

TEST_CASE("same seed generates the same game, different seeds differ somewhere") {
  GameSpec spec = basic_spec();
  Environment a(spec), b(spec);
  REQUIRE(a.room_count() == b.room_count());
  for (int i = 0; i < a.room_count(); ++i) {
    const auto& xs = a.actions_at(i);
    const auto& ys = b.actions_at(i);
    REQUIRE(xs.size() == ys.size());
    for (size_t j = 0; j < xs.size(); ++j) {
      CHECK(xs[j].raw_text == ys[j].raw_text);
      CHECK(xs[j].tokens == ys[j].tokens);
      CHECK(xs[j].id == ys[j].id);
    }
  }
  auto ra = a.reset(), rb = b.reset();
  CHECK(ra.observation.tokens == rb.observation.tokens);
  CHECK(ra.observation.raw_text == rb.observation.raw_text);

  bool any_difference = false;
  for (uint64_t other = 8; other < 18 && !any_difference; ++other) {
    GameSpec alt = spec;
    alt.seed = other;
    Environment c(alt);
    for (int i = 0; i < spec.depth && !any_difference; ++i)
      if (c.actions_at(i)[0].raw_text != a.actions_at(i)[0].raw_text) any_difference = true;
  }
  CHECK(any_difference);
}

TEST_CASE("walkthrough collects every reward and matches exhaustive search") {
  GameSpec spec = basic_spec();
  Environment env(spec);
  auto path = env.walkthrough();
  REQUIRE(static_cast<int>(path.size()) == spec.depth);

  auto r = env.reset();
  std::vector<double> rewards;
  for (const auto& a : path) {
    REQUIRE(!r.done);
    r = env.step(a);
    rewards.push_back(r.reward);
  }
  CHECK(r.done);
  CHECK(r.valid_actions.empty());
  CHECK(env.score() == env.max_return());
  CHECK(env.max_return() == 15.0);
  CHECK(rewards == std::vector<double>{0.0, 5.0, 0.0, 10.0});

  auto found = brute_force(spec, 16);
  CHECK(found.best_return == env.max_return());
  CHECK(found.min_steps_to_finish == spec.depth);
}

TEST_CASE("bottleneck phrases are unique across the whole game") {
  GameSpec spec;
  spec.depth = 6;
  spec.branching = 4;
  spec.bottleneck_positions = {0, 2, 4, 5};
  spec.deadend_positions = {1, 3};
  spec.rewards = {{6, 10.0}};
  spec.seed = 13;
  Environment env(spec);

  std::map<std::string, int> counts;
  for (int i = 0; i < env.room_count(); ++i)
    for (const auto& a : env.actions_at(i)) counts[a.raw_text]++;

  // identify each room's advance behaviorally: the action that moves forward
  auto wt = env.walkthrough();
  std::set<std::string> phrases;
  std::set<int> bottlenecks(spec.bottleneck_positions.begin(), spec.bottleneck_positions.end());
  for (int pos = 0; pos < spec.depth; ++pos) {
    Environment probe(spec);
    probe.reset();
    for (int s = 0; s < pos; ++s) probe.step(wt[s]);
    int adv = -1;
    for (const auto& a : probe.actions_at(pos)) {
      Environment fork = probe;
      fork.step(a);
      if (fork.position() == pos + 1) adv = a.id;
    }
    REQUIRE(adv >= 0);
    const auto& phrase = probe.actions_at(pos)[adv].raw_text;
    CHECK(phrase == wt[pos].raw_text);
    if (bottlenecks.count(pos)) {
      CHECK(counts[phrase] == 1);                // occurs nowhere else in the game
      CHECK(phrase.rfind("go ", 0) != 0);        // a ritual phrase, not a direction
      CHECK(phrases.insert(phrase).second);      // never reused at another bottleneck
    } else {
      CHECK(phrase.rfind("go ", 0) == 0);
    }
  }
  CHECK(phrases.size() == spec.bottleneck_positions.size());
}

TEST_CASE("decoy actions leave the state unchanged") {
  GameSpec spec = basic_spec();
  Environment env(spec);
  auto r = env.reset();
  auto wt = env.walkthrough();
  int decoy = -1;
  for (size_t j = 0; j < r.valid_actions.size(); ++j)
    if (r.valid_actions[j].raw_text != wt[0].raw_text) decoy = static_cast<int>(j);
  REQUIRE(decoy >= 0);
  for (int rep = 0; rep < 4; ++rep) {
    auto rr = env.step(r.valid_actions[decoy]);
    CHECK(env.position() == 0);
    CHECK(rr.reward == 0.0);
    CHECK(!rr.done);
    CHECK(rr.observation.tokens == r.observation.tokens);
  }
  CHECK(env.score() == 0.0);
}

TEST_CASE("traps absorb: no way back, no reward, never done") {
  GameSpec spec = basic_spec();  // dead end reachable from room 2
  Environment env(spec);
  auto r = env.reset();
  auto wt = env.walkthrough();
  r = env.step(wt[0]);
  r = env.step(wt[1]);
  REQUIRE(env.position() == 2);

  // find the trap: the action that moves us somewhere that is not room 3
  int before = env.position();
  int trap = -1;
  for (size_t j = 0; j < r.valid_actions.size(); ++j) {
    Environment probe = env;
    probe.step(r.valid_actions[j]);
    if (probe.position() != before && probe.position() != before + 1) trap = static_cast<int>(j);
  }
  REQUIRE(trap >= 0);
  r = env.step(r.valid_actions[trap]);
  int pit = env.position();
  CHECK(pit > spec.depth);
  CHECK(r.reward == 0.0);
  CHECK(!r.done);
  REQUIRE(!r.valid_actions.empty());
  for (int rep = 0; rep < 6; ++rep) {
    r = env.step(r.valid_actions[rep % r.valid_actions.size()]);
    CHECK(env.position() == pit);
    CHECK(!r.done);
    CHECK(r.reward == 0.0);
  }
}

TEST_CASE("stepping is rejected after the episode ends or with a forged action") {
  GameSpec spec = basic_spec();
  Environment env(spec);
  auto r = env.reset();

  ActionCandidate forged = r.valid_actions[0];
  forged.tokens.push_back(kSepToken);
  CHECK_THROWS_AS(env.step(forged), std::invalid_argument);
  ActionCandidate bad_id = r.valid_actions[0];
  bad_id.id = 99;
  CHECK_THROWS_AS(env.step(bad_id), std::invalid_argument);

  for (const auto& a : env.walkthrough()) env.step(a);
  CHECK(env.done());
  CHECK_THROWS_AS(env.step(r.valid_actions[0]), std::runtime_error);

  r = env.reset();
  CHECK(env.score() == 0.0);
  CHECK(env.position() == 0);
  CHECK(!env.done());
  CHECK(r.observation.tokens == Environment(spec).reset().observation.tokens);
}

TEST_CASE("every chain room exposes exactly `branching` candidates with dense ids") {
  GameSpec spec = basic_spec();
  Environment env(spec);
  for (int s = 0; s < spec.depth; ++s) {
    const auto& acts = env.actions_at(s);
    REQUIRE(static_cast<int>(acts.size()) == spec.branching);
    for (size_t j = 0; j < acts.size(); ++j) {
      CHECK(acts[j].id == static_cast<int>(j));
      CHECK(!acts[j].tokens.empty());
      for (int t : acts[j].tokens) CHECK(t < env.vocab().size());
    }
  }
  CHECK(env.actions_at(spec.depth).empty());  // goal room
  CHECK_THROWS_AS(env.actions_at(env.room_count()), std::invalid_argument);
}

TEST_CASE("large games keep a closed vocabulary") {
  GameSpec spec;
  spec.depth = 24;
  spec.branching = 6;
  spec.bottleneck_positions = {2, 5, 9, 14, 19, 23};
  spec.deadend_positions = {1, 6, 12, 18};
  spec.rewards = {{12, 5.0}, {24, 10.0}};
  spec.seed = 3;
  Environment env(spec);
  CHECK(env.vocab().size() <= 512);
  auto r = env.reset();
  for (const auto& a : env.walkthrough()) {
    for (int t : r.observation.tokens) {
      CHECK(t >= 0);
      CHECK(t < env.vocab().size());
    }
    r = env.step(a);
  }
  CHECK(env.score() == 15.0);
}

TEST_CASE("slips keep the state in place at the configured rate") {
  GameSpec spec;
  spec.depth = 1;
  spec.branching = 2;
  spec.rewards = {{1, 1.0}};
  spec.stochastic = true;
  spec.p_slip = 0.1;
  spec.seed = 5;
  Environment env(spec);
  auto advance = env.walkthrough()[0];

  int slipped = 0, trials = 2000;
  for (int i = 0; i < trials; ++i) {
    env.reseed_dynamics(1000 + i);
    auto r = env.reset();
    r = env.step(advance);
    if (!r.done) {
      CHECK(env.position() == 0);
      CHECK(r.reward == 0.0);
      ++slipped;
    } else {
      CHECK(r.reward == 1.0);
    }
  }
  double freq = static_cast<double>(slipped) / trials;
  double se = std::sqrt(0.1 * 0.9 / trials);
  CHECK(std::abs(freq - 0.1) < 3 * se + 1e-9);

  // the same dynamics seed replays the same slips
  std::vector<bool> first, second;
  for (int round = 0; round < 2; ++round) {
    env.reseed_dynamics(42);
    for (int i = 0; i < 50; ++i) {
      auto r = env.reset();
      r = env.step(advance);
      (round == 0 ? first : second).push_back(r.done);
    }
  }
  CHECK(first == second);
}

TEST_CASE("distractor sentences extend observations at the configured rate") {
  GameSpec det = basic_spec();
  Environment base(det);
  size_t base_len = base.reset().observation.tokens.size();
  std::string base_text = base.reset().observation.raw_text;

  GameSpec noisy = det;
  noisy.stochastic = true;
  noisy.distractor_rate = 0.3;
  Environment env(noisy);
  env.reseed_dynamics(9);

  int extended = 0, trials = 5000;
  for (int i = 0; i < trials; ++i) {
    auto r = env.reset();
    const auto& toks = r.observation.tokens;
    REQUIRE(toks.size() >= base_len);
    CHECK(std::equal(toks.begin(), toks.begin() + base_len,
                     Environment(det).reset().observation.tokens.begin()));
    if (toks.size() > base_len) {
      ++extended;
      CHECK(r.observation.raw_text.rfind(base_text, 0) == 0);
      for (int t : toks) CHECK(t < env.vocab().size());
    }
  }
  double freq = static_cast<double>(extended) / trials;
  double se = std::sqrt(0.3 * 0.7 / trials);
  CHECK(std::abs(freq - 0.3) < 3 * se + 1e-9);
}

TEST_CASE("deep games with a mid-chain dead end are solvable only along the chain") {
  GameSpec spec;
  spec.depth = 3;
  spec.branching = 3;
  spec.bottleneck_positions = {1};
  spec.deadend_positions = {0};
  spec.rewards = {{3, 2.5}};
  spec.seed = 11;
  auto found = brute_force(spec, 12);
  CHECK(found.best_return == 2.5);
  CHECK(found.min_steps_to_finish == 3);
}
