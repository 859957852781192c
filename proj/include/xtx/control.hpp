#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "xtx/memory.hpp"
#include "xtx/policy_il.hpp"
#include "xtx/policy_invdy.hpp"

// Episode controller. Each episode starts by exploiting (acting mostly from
// the imitation policy, with a small TD admixture) until it has matched the
// best known score or run out of the budgeted prefix, then switches to pure
// exploration for the remainder. Every few episodes the trajectory buffer is
// refreshed and the imitation policy retrained on it.

namespace xtx {

enum class Phase { Exploit, Explore };

enum class Variant { Xtx, XtxUniform, XtxNoMix, Drrn, Lambda0, Lambda05, Lambda1 };

const std::vector<std::string>& variant_names();
std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);  // throws listing the valid names

// How a variant departs from the full algorithm.
struct VariantTraits {
  bool phases = true;            // exploit/explore switching within an episode
  double fixed_lambda = 1.0;     // acting mixture when phases are off
  bool explore_uniform = false;  // exploration picks uniformly instead of by Q
  bool exploit_pure_il = false;  // exploitation drops the TD admixture entirely
  bool train_il = true;
  bool refresh = true;           // periodic buffer refresh and M/l_max/T updates
  bool zero_alphas = false;      // strip intrinsic reward and auxiliary losses
  bool zero_rho = false;         // plain uniform replay
};

VariantTraits traits_for(Variant v);

struct PhaseState {
  // across episodes
  double M = 0.0;   // best score in the last refreshed buffer
  int l_max = 0;    // longest trajectory in the last refreshed buffer
  int T = 50;       // episode step budget
  int R = 50;       // exploration slack added on top of l_max
  int episodes_since_retrain = 0;
  // within an episode
  int t = 0;  // 1-based index of the step being chosen
  double episode_score = 0.0;
  bool latched_explore = false;

  double lambda_exploit() const { return 1.0 / (2.0 * static_cast<double>(T)); }
  void begin_episode() {
    t = 0;
    episode_score = 0.0;
    latched_explore = false;
  }
};

// Exploit only while the score still trails M and the step budget leaves room
// to explore afterwards; once exploration starts it persists for the episode.
Phase select_phase(PhaseState& st);

// lambda * a + (1 - lambda) * b. Endpoints return the input unchanged.
std::vector<double> mixture_distribution(double lambda, std::span<const double> a,
                                         std::span<const double> b);

struct ControlConfig {
  int k = 10;
  double beta1 = 1.0;
  double beta2 = 10000.0;
  double rho = 0.5;
  int R = 50;
  int initial_T = 50;
  int retrain_interval = 10;
  int batch = 64;
  int update_every = 1;  // TD updates happen every this many steps
  IntrinsicWeights weights;
};

struct EpisodeStats {
  uint64_t trajectory_id = 0;
  double score = 0.0;
  int length = 0;
  int phase1_steps = 0;
};

struct ControlRngs {
  std::mt19937_64 action, replay, sampler, il;
};

class Controller {
 public:
  Controller(Environment& env, QNetwork& qnet, ILPolicy& il, ReplayBuffer& replay,
             TrajectoryStore& store, VariantTraits traits, ControlConfig cfg, ControlRngs& rngs);

  EpisodeStats run_episode();
  // Call once per finished episode; fires every retrain_interval episodes.
  bool maybe_retrain();

  const PhaseState& phase_state() const { return state_; }
  PhaseState& phase_state() { return state_; }

 private:
  Environment& env_;
  QNetwork& qnet_;
  ILPolicy& il_;
  ReplayBuffer& replay_;
  TrajectoryStore& store_;
  VariantTraits traits_;
  ControlConfig cfg_;
  ControlRngs& rngs_;
  PhaseState state_;
  uint64_t next_traj_id_ = 1;
};

}  // namespace xtx
