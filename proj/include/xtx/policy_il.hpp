#pragma once

#include <random>
#include <vector>

#include "xtx/memory.hpp"
#include "xtx/nn.hpp"

// Imitation policy: scores (context, action) pairs and is retrained from
// scratch on each refreshed trajectory buffer, so it always reflects the
// current best episodes rather than stale ones.

namespace xtx {

struct ILConfig {
  int vocab = 0;
  int emb_dim = 64;
  int hidden = 128;
  EncoderKind encoder = EncoderKind::MeanMlp;
  OptimizerConfig opt;  // lr defaults to 1e-3 for this policy
  int batch = 64;
  int passes = 40;
  bool warm_start = false;  // keep parameters across retrains instead of reinitialising
  double init_range = 0.08;

  void validate() const;
};

class ILPolicy {
 public:
  ILPolicy(const ILConfig& cfg, std::mt19937_64& init_rng);

  // One logit per candidate, order preserved. Throws on an empty valid set.
  std::vector<double> scores(const Context& ctx, const std::vector<ActionCandidate>& valid);
  // Softmax of the candidate scores over the valid set only.
  std::vector<double> distribution(const Context& ctx, const std::vector<ActionCandidate>& valid);

  // Cross-entropy training on every step of the buffer, `passes` shuffled
  // sweeps of minibatches. Returns the mean loss of each pass. Throws on an
  // empty buffer.
  std::vector<double> train(const TrajectoryBuffer& buffer, std::mt19937_64& rng);

  ParamStore& params() { return ps_; }
  const ILConfig& config() const { return cfg_; }

 private:
  Tape::Slot score_slot(Tape::Slot ctx_r, std::span<const int> action_tokens);

  ILConfig cfg_;
  ParamStore ps_;
  SequenceEncoder f_ctx_, f_act_;
  Mlp score_mlp_;
  Tape tape_;
};

}  // namespace xtx
