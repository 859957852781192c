#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "xtx/env.hpp"

// Episode memory: a trajectory archive with score- and length-biased sampling
// for building imitation buffers, plus a transition replay buffer with
// max-score prioritisation for TD training.

namespace xtx {

// What the acting policy saw at a step: the two most recent actions (padded at
// episode start) and the current observation.
struct Context {
  std::vector<int> prev_action2;  // action taken two steps ago
  std::vector<int> prev_action1;  // action taken last step
  Observation observation;

  // prev_action2 <sep> prev_action1 <sep> observation
  std::vector<int> tokens() const;
};

Context initial_context(const Observation& obs);
Context advance_context(const Context& prev, const std::vector<int>& taken, const Observation& next);

struct Transition {
  Context context;
  std::vector<ActionCandidate> valid_actions;
  int action_index = -1;
  double reward = 0.0;  // game reward only; intrinsic terms are added at training time
  Observation next_observation;
  std::vector<ActionCandidate> next_valid_actions;  // empty iff terminal
  bool terminal = false;
  uint64_t trajectory_id = 0;
  int step_index = 0;
};

struct Trajectory {
  uint64_t id = 0;
  std::vector<Transition> steps;

  double score() const;
  int length() const { return static_cast<int>(steps.size()); }
};

// Snapshot handed to the imitation learner after each refresh.
struct TrajectoryBuffer {
  std::vector<Trajectory> trajectories;
  double max_score = 0.0;
  int max_length = 0;
};

// Archive of every finished episode. Sampling is a two-stage draw: first a
// unique score (softmax over standardised scores, inverse temperature beta1),
// then a trajectory within that score group (softmax over negated standardised
// lengths, inverse temperature beta2, so shorter trajectories dominate).
class TrajectoryStore {
 public:
  explicit TrajectoryStore(size_t capacity = 20000);

  void add(Trajectory traj);
  size_t size() const { return trajs_.size(); }
  bool empty() const { return trajs_.empty(); }

  std::vector<double> unique_scores() const;  // ascending

  // Analytic per-score probabilities; degenerate spread falls back to uniform.
  std::vector<std::pair<double, double>> score_distribution(double beta1) const;
  // Analytic per-trajectory probabilities within one score group, in id order.
  std::vector<std::pair<uint64_t, double>> length_distribution(double score, double beta2) const;

  double sample_score(double beta1, std::mt19937_64& rng) const;
  const Trajectory& sample_trajectory(double score, double beta2, std::mt19937_64& rng) const;

  // k independent two-stage draws (with replacement). Throws when empty.
  TrajectoryBuffer refresh_buffer(int k, double beta1, double beta2, std::mt19937_64& rng) const;

 private:
  void evict_one();

  std::map<uint64_t, Trajectory> trajs_;          // id order == insertion order
  std::map<double, std::vector<uint64_t>> by_score_;
  size_t capacity_;
};

// FIFO transition replay. Transitions from trajectories that match the highest
// score seen so far are marked, sampled preferentially (probability rho per
// batch member), and protected from eviction.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity = 100000);

  void push(Transition t);
  // Call once per finished episode so marking tracks the global best score.
  void end_episode(const Trajectory& traj);

  // Pointers stay valid until the next push/end_episode. Throws when empty.
  std::vector<const Transition*> sample_batch(int batch, double rho, std::mt19937_64& rng) const;

  size_t size() const { return live_.size(); }
  double max_score_seen() const { return max_score_; }
  size_t marked_count() const { return marked_live_.size(); }
  const std::set<uint64_t>& marked_trajectories() const { return marked_trajs_; }
  bool is_marked(uint64_t trajectory_id) const { return marked_trajs_.count(trajectory_id) > 0; }

 private:
  struct Slot {
    Transition t;
    uint64_t seq = 0;
    bool live = false;
    bool marked = false;
    int live_pos = -1;
    int marked_pos = -1;
  };

  void set_traj_marked(uint64_t traj, bool on);
  void remove_slot(int id);
  void evict_one();

  std::vector<Slot> slots_;
  std::vector<int> free_;
  std::deque<std::pair<int, uint64_t>> fifo_;  // (slot, seq), oldest first
  std::vector<int> live_;
  std::vector<int> marked_live_;
  std::map<uint64_t, std::vector<int>> traj_slots_;
  std::set<uint64_t> marked_trajs_;
  double max_score_ = -std::numeric_limits<double>::infinity();
  uint64_t next_seq_ = 0;
  size_t capacity_;
};

}  // namespace xtx
