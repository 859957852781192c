#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "xtx/rng.hpp"

// Synthetic text-adventure games. Each game is a chain of rooms: every room
// offers one advancing action plus decoys that leave the state unchanged, some
// rooms hide the advance behind a one-off "novel" action phrase, and some rooms
// contain a trap leading to an absorbing dead end. Text is templated and the
// vocabulary is closed, so agents can be trained without a tokenizer stack.

namespace xtx {

constexpr int kPadToken = 0;  // stands in for missing history actions
constexpr int kSepToken = 1;  // separates fields in policy contexts

struct Vocab {
  std::vector<std::string> words;
  std::map<std::string, int> index;

  Vocab();
  int add(const std::string& w);                  // idempotent
  int id(const std::string& w) const;             // throws on unknown word
  int size() const { return static_cast<int>(words.size()); }
  std::vector<int> tokenize(const std::string& text) const;
  std::string text(std::span<const int> tokens) const;
};

struct Observation {
  std::vector<int> tokens;
  std::string raw_text;
};

struct ActionCandidate {
  std::vector<int> tokens;
  int id = -1;  // position within the valid set it came from
  std::string raw_text;
};

struct StepResult {
  Observation observation;
  std::vector<ActionCandidate> valid_actions;  // empty iff done
  double reward = 0.0;
  bool done = false;
};

struct GameSpec {
  int depth = 2;
  int branching = 3;
  std::vector<int> bottleneck_positions;   // subset of [0, depth)
  std::vector<int> deadend_positions;      // subset of [0, depth)
  std::map<int, double> rewards;           // arrival position in [1, depth] -> reward
  bool stochastic = false;
  double p_slip = 0.0;          // chance a step leaves the state unchanged
  double distractor_rate = 0.0; // chance an observation gains a filler sentence
  uint64_t seed = 0;            // fixes the generated structure

  void validate() const;  // throws std::invalid_argument naming the bad field
};

class Environment {
 public:
  explicit Environment(GameSpec spec);  // validates and generates the game

  StepResult reset();
  // Action must be one of the current valid set (matched by id and tokens).
  StepResult step(const ActionCandidate& action);

  // The advancing action of each chain room, in order; replaying it from
  // reset collects every reward.
  std::vector<ActionCandidate> walkthrough() const;
  double max_return() const;

  double score() const { return score_; }
  bool done() const { return done_; }
  int position() const { return cur_; }
  const Vocab& vocab() const { return vocab_; }
  const GameSpec& spec() const { return spec_; }

  // Replaces the stochastic-dynamics stream (slips and distractors).
  void reseed_dynamics(uint64_t seed);

  // Generated valid set of a room, for inspection and tests.
  const std::vector<ActionCandidate>& actions_at(int state_index) const;
  int room_count() const { return static_cast<int>(rooms_.size()); }

 private:
  struct Room {
    std::vector<int> base_tokens;
    std::string base_text;
    std::vector<ActionCandidate> actions;
    int advance_index = -1;   // index into actions, -1 if absorbing
    int trap_index = -1;      // index into actions, -1 if none
    int trap_target = -1;     // room index of the dead end
    bool terminal = false;
  };

  void generate();
  Observation observe(int room);
  StepResult make_result(int room, double reward);

  GameSpec spec_;
  Vocab vocab_;
  std::vector<Room> rooms_;  // 0..depth-1 chain, depth terminal, then dead ends
  std::vector<std::vector<int>> distractors_;
  std::vector<std::string> distractor_texts_;
  std::mt19937_64 dyn_rng_;
  int cur_ = 0;
  double score_ = 0.0;
  bool done_ = false;
};

}  // namespace xtx
