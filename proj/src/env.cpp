#include "xtx/env.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace xtx {

namespace {

const char* kRoomNames[] = {"cellar", "attic",  "garden", "kitchen", "vault",   "tower",
                            "crypt",  "stable", "library", "forge",  "chapel",  "gallery",
                            "larder", "armory", "atrium",  "grotto", "belfry",  "solarium"};
const char* kDeadendNames[] = {"chasm", "oubliette", "sinkhole", "mire", "ravine", "cistern"};
const char* kDecorObjects[] = {"candle", "ledger", "mirror", "barrel", "tapestry",
                               "anvil",  "lantern", "statue", "basket", "kettle"};
const char* kDecorSpots[] = {"doorway", "hearth", "alcove", "staircase", "archway",
                             "banister", "pillar", "threshold", "windowsill", "grate"};

const char* kDirections[] = {"north", "south", "east", "west", "onward", "upward", "down", "ahead"};

const char* kDecoyVerbs[] = {"examine", "take", "touch", "read", "open", "search", "push", "pull"};
const char* kDecoyNouns[] = {"wall", "dust", "chair", "stone", "shelf", "crate", "rug", "beam"};

// Reserved for bottleneck advances so the phrase can never occur elsewhere.
const char* kNovelVerbs[] = {"whisper", "ignite", "unseal", "invoke", "chant", "anoint", "kindle", "trace"};
const char* kNovelNouns[] = {"rune", "sigil", "idol", "prism", "talisman", "effigy", "glyph", "censer"};

const char* kTrapVerbs[] = {"enter", "descend", "leap"};

const char* kDistractors[] = {
    "a faint draft stirs the dust .",
    "somewhere water drips slowly .",
    "the floorboards creak underfoot .",
    "a moth circles overhead .",
    "shadows flicker along the wall .",
    "the air smells of old paper .",
};

template <size_t N>
const char* pick(std::mt19937_64& g, const char* (&pool)[N]) {
  return pool[uniform_int(g, static_cast<int>(N))];
}

}  // namespace

Vocab::Vocab() {
  add("<pad>");
  add("<sep>");
}

int Vocab::add(const std::string& w) {
  auto it = index.find(w);
  if (it != index.end()) return it->second;
  int id = static_cast<int>(words.size());
  words.push_back(w);
  index.emplace(w, id);
  return id;
}

int Vocab::id(const std::string& w) const {
  auto it = index.find(w);
  if (it == index.end()) throw std::invalid_argument("Vocab: unknown word '" + w + "'");
  return it->second;
}

std::vector<int> Vocab::tokenize(const std::string& text) const {
  std::vector<int> out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) out.push_back(id(w));
  return out;
}

std::string Vocab::text(std::span<const int> tokens) const {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    int t = tokens[i];
    if (t < 0 || t >= size()) throw std::invalid_argument("Vocab: token id out of range");
    if (i) out += ' ';
    out += words[t];
  }
  return out;
}

void GameSpec::validate() const {
  if (depth < 1) throw std::invalid_argument("GameSpec: depth must be >= 1");
  if (branching < 1 || branching > 32)
    throw std::invalid_argument("GameSpec: branching must be in [1, 32]");
  if (bottleneck_positions.size() > 32)
    throw std::invalid_argument("GameSpec: too many bottleneck positions (max 32)");
  for (int p : bottleneck_positions)
    if (p < 0 || p >= depth)
      throw std::invalid_argument("GameSpec: bottleneck position out of [0, depth)");
  for (int p : deadend_positions)
    if (p < 0 || p >= depth)
      throw std::invalid_argument("GameSpec: deadend position out of [0, depth)");
  if (!deadend_positions.empty() && branching < 2)
    throw std::invalid_argument("GameSpec: deadend rooms need branching >= 2");
  if (rewards.empty()) throw std::invalid_argument("GameSpec: at least one reward position required");
  for (const auto& [pos, val] : rewards) {
    (void)val;
    if (pos < 1 || pos > depth)
      throw std::invalid_argument("GameSpec: reward position out of [1, depth]");
  }
  if (p_slip < 0.0 || p_slip >= 1.0)
    throw std::invalid_argument("GameSpec: p_slip must be in [0, 1)");
  if (distractor_rate < 0.0 || distractor_rate > 1.0)
    throw std::invalid_argument("GameSpec: distractor_rate must be in [0, 1]");
  if (!stochastic && (p_slip > 0.0 || distractor_rate > 0.0))
    throw std::invalid_argument("GameSpec: p_slip/distractor_rate require stochastic=true");
}

Environment::Environment(GameSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  dyn_rng_ = make_stream(spec_.seed, "env-dynamics");
  generate();
  cur_ = 0;
}

void Environment::reseed_dynamics(uint64_t seed) { dyn_rng_ = make_stream(seed, "env-dynamics"); }

void Environment::generate() {
  std::mt19937_64 g = make_stream(spec_.seed, "env-structure");

  // Distractor sentences are fixed per game so the vocabulary stays closed.
  for (const char* s : kDistractors) {
    distractor_texts_.push_back(s);
    std::istringstream in(s);
    std::string w;
    std::vector<int> toks;
    while (in >> w) toks.push_back(vocab_.add(w));
    distractors_.push_back(std::move(toks));
  }

  std::set<int> bottlenecks(spec_.bottleneck_positions.begin(), spec_.bottleneck_positions.end());
  std::set<int> deadends(spec_.deadend_positions.begin(), spec_.deadend_positions.end());
  std::set<std::pair<int, int>> used_novel;

  auto room_text = [&](const std::string& name) {
    std::string obj = pick(g, kDecorObjects);
    std::string spot = pick(g, kDecorSpots);
    return "you are in the " + name + " . a " + obj + " rests by the " + spot + " .";
  };
  auto add_tokens = [&](const std::string& text) {
    std::istringstream in(text);
    std::string w;
    std::vector<int> toks;
    while (in >> w) toks.push_back(vocab_.add(w));
    return toks;
  };
  auto make_action = [&](const std::string& text) {
    ActionCandidate a;
    a.raw_text = text;
    a.tokens = add_tokens(text);
    return a;
  };

  std::vector<Room> traps;
  int next_trap_index = spec_.depth + 1;  // dead ends are appended after the goal room

  rooms_.resize(spec_.depth + 1);
  for (int s = 0; s < spec_.depth; ++s) {
    Room room;
    std::string name = s < static_cast<int>(std::size(kRoomNames))
                           ? kRoomNames[s]
                           : "hall_" + std::to_string(s);
    room.base_text = room_text(name);
    room.base_tokens = add_tokens(room.base_text);

    std::vector<ActionCandidate> acts;

    // Advancing action: a one-off ritual phrase at bottlenecks, a plain
    // direction elsewhere.
    if (bottlenecks.count(s)) {
      int v = 0, n = 0;
      do {
        v = uniform_int(g, static_cast<int>(std::size(kNovelVerbs)));
        n = uniform_int(g, static_cast<int>(std::size(kNovelNouns)));
      } while (used_novel.count({v, n}));
      used_novel.insert({v, n});
      acts.push_back(make_action(std::string(kNovelVerbs[v]) + " " + kNovelNouns[n]));
    } else {
      acts.push_back(make_action(std::string("go ") + pick(g, kDirections)));
    }
    int advance_slot = 0;

    int trap_slot = -1;
    if (deadends.count(s)) {
      std::string pit = kDeadendNames[traps.size() % std::size(kDeadendNames)];
      pit += "_" + std::to_string(s);
      acts.push_back(make_action(std::string(pick(g, kTrapVerbs)) + " " + pit));
      trap_slot = 1;

      Room trap;
      trap.base_text = "you are stuck in the " + pit + " . there is no way back .";
      trap.base_tokens = add_tokens(trap.base_text);
      std::set<std::pair<int, int>> seen;
      for (int d = 0; d < spec_.branching; ++d) {
        int v = 0, n = 0;
        do {
          v = uniform_int(g, static_cast<int>(std::size(kDecoyVerbs)));
          n = uniform_int(g, static_cast<int>(std::size(kDecoyNouns)));
        } while (seen.count({v, n}));
        seen.insert({v, n});
        trap.actions.push_back(make_action(std::string(kDecoyVerbs[v]) + " " + kDecoyNouns[n]));
      }
      for (size_t i = 0; i < trap.actions.size(); ++i) trap.actions[i].id = static_cast<int>(i);
      traps.push_back(std::move(trap));
      room.trap_target = next_trap_index++;
    }

    std::set<std::pair<int, int>> seen;
    while (static_cast<int>(acts.size()) < spec_.branching) {
      int v = 0, n = 0;
      do {
        v = uniform_int(g, static_cast<int>(std::size(kDecoyVerbs)));
        n = uniform_int(g, static_cast<int>(std::size(kDecoyNouns)));
      } while (seen.count({v, n}));
      seen.insert({v, n});
      acts.push_back(make_action(std::string(kDecoyVerbs[v]) + " " + kDecoyNouns[n]));
    }

    // Shuffle so the advance is not always candidate 0.
    std::vector<int> order(acts.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    shuffle_inplace(order, g);
    for (size_t i = 0; i < order.size(); ++i) {
      room.actions.push_back(acts[order[i]]);
      room.actions.back().id = static_cast<int>(i);
      if (order[i] == advance_slot) room.advance_index = static_cast<int>(i);
      if (order[i] == trap_slot) room.trap_index = static_cast<int>(i);
    }
    rooms_[s] = std::move(room);
  }

  Room goal;
  goal.terminal = true;
  goal.base_text = "the way opens and your quest is complete .";
  goal.base_tokens = add_tokens(goal.base_text);
  rooms_[spec_.depth] = std::move(goal);

  for (auto& t : traps) rooms_.push_back(std::move(t));

  if (vocab_.size() > 512)
    throw std::runtime_error("Environment: generated vocabulary exceeds 512 tokens");
}

Observation Environment::observe(int room) {
  Observation o;
  o.tokens = rooms_[room].base_tokens;
  o.raw_text = rooms_[room].base_text;
  if (spec_.stochastic && spec_.distractor_rate > 0.0 &&
      uniform01(dyn_rng_) < spec_.distractor_rate) {
    int d = uniform_int(dyn_rng_, static_cast<int>(distractors_.size()));
    o.tokens.insert(o.tokens.end(), distractors_[d].begin(), distractors_[d].end());
    o.raw_text += " " + distractor_texts_[d];
  }
  return o;
}

StepResult Environment::make_result(int room, double reward) {
  StepResult r;
  r.observation = observe(room);
  if (!rooms_[room].terminal) r.valid_actions = rooms_[room].actions;
  r.reward = reward;
  r.done = rooms_[room].terminal;
  return r;
}

StepResult Environment::reset() {
  cur_ = 0;
  score_ = 0.0;
  done_ = false;
  return make_result(cur_, 0.0);
}

StepResult Environment::step(const ActionCandidate& action) {
  if (done_) throw std::runtime_error("Environment: step after episode end");
  const auto& acts = rooms_[cur_].actions;
  if (action.id < 0 || action.id >= static_cast<int>(acts.size()) ||
      acts[action.id].tokens != action.tokens)
    throw std::invalid_argument("Environment: action '" + action.raw_text +
                                "' is not in the current valid set");

  bool slipped = spec_.stochastic && spec_.p_slip > 0.0 && uniform01(dyn_rng_) < spec_.p_slip;
  int next = cur_;
  double reward = 0.0;
  if (!slipped) {
    const Room& room = rooms_[cur_];
    if (action.id == room.advance_index) {
      next = cur_ + 1;
      if (auto it = spec_.rewards.find(next); it != spec_.rewards.end()) reward = it->second;
    } else if (action.id == room.trap_index) {
      next = room.trap_target;
    }
    // decoys (and all dead-end actions) leave the state unchanged
  }

  cur_ = next;
  score_ += reward;
  done_ = rooms_[cur_].terminal;
  return make_result(cur_, reward);
}

std::vector<ActionCandidate> Environment::walkthrough() const {
  std::vector<ActionCandidate> path;
  for (int s = 0; s < spec_.depth; ++s)
    path.push_back(rooms_[s].actions[rooms_[s].advance_index]);
  return path;
}

double Environment::max_return() const {
  double total = 0.0;
  for (const auto& [pos, val] : spec_.rewards) {
    (void)pos;
    total += val;
  }
  return total;
}

const std::vector<ActionCandidate>& Environment::actions_at(int state_index) const {
  if (state_index < 0 || state_index >= static_cast<int>(rooms_.size()))
    throw std::invalid_argument("Environment: state index out of range");
  return rooms_[state_index].actions;
}

}  // namespace xtx
