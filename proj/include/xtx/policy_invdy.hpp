#pragma once

#include <random>
#include <vector>

#include "xtx/memory.hpp"
#include "xtx/nn.hpp"

// TD-trained action scorer with self-supervised auxiliary heads. Observations
// and action candidates are encoded separately and scored pairwise; an inverse
// dynamics decoder (predict the action from consecutive observations) and an
// action autodecoder regularise the representations and supply an intrinsic
// reward bonus for surprising transitions.

namespace xtx {

struct IntrinsicWeights {
  double alpha1 = 1.0;  // intrinsic reward coefficient
  double alpha2 = 1.0;  // inverse-dynamics loss coefficient
  double alpha3 = 1.0;  // action decoder loss coefficient
};

struct TdLossReport {
  double td = 0.0;
  double inv = 0.0;
  double dec = 0.0;
  double total = 0.0;
};

struct QNetConfig {
  int vocab = 0;
  int emb_dim = 64;
  int hidden = 128;
  EncoderKind encoder = EncoderKind::MeanMlp;
  double gamma = 0.9;
  OptimizerConfig opt;  // lr defaults to 1e-4 for this policy
  double init_range = 0.08;

  QNetConfig() { opt.lr = 1e-4; }
  void validate() const;
};

class QNetwork {
 public:
  QNetwork(const QNetConfig& cfg, std::mt19937_64& init_rng);

  // One value per candidate, order preserved. Throws on an empty valid set.
  std::vector<double> q_values(const Observation& obs, const std::vector<ActionCandidate>& valid);
  // Softmax of q_values over the valid set.
  std::vector<double> policy_distribution(const Observation& obs,
                                          const std::vector<ActionCandidate>& valid);

  // Negative log-likelihood of the action tokens given (obs, next_obs).
  double inv_loss(const Observation& obs, const std::vector<int>& action_tokens,
                  const Observation& next_obs);
  // Negative log-likelihood of the action tokens given their own encoding.
  double dec_loss(const std::vector<int>& action_tokens);
  // Game reward plus the weighted inverse-dynamics surprise, evaluated with
  // the current parameters.
  double intrinsic_reward(const Transition& t, double alpha1);

  // One optimizer step on the batch mean of the combined loss. TD targets are
  // evaluated without recording, so they act as constants. Reports the
  // per-component batch means. Throws on an empty batch or non-finite loss.
  TdLossReport td_update(const std::vector<const Transition*>& batch, const IntrinsicWeights& w);

  ParamStore& params() { return ps_; }
  const QNetConfig& config() const { return cfg_; }

 private:
  Tape::Slot obs_repr(std::span<const int> tokens);
  Tape::Slot act_repr(std::span<const int> tokens);
  Tape::Slot q_slot(Tape::Slot obs_r, Tape::Slot act_r);
  Tape::Slot inv_slot(Tape::Slot obs_r, Tape::Slot next_r, std::span<const int> action_tokens);

  QNetConfig cfg_;
  ParamStore ps_;
  SequenceEncoder f_obs_, f_act_;
  Mlp q_mlp_;
  int g_inv_w_ = -1, g_inv_b_ = -1;  // fuses (obs, next_obs) into a decoder state
  GruDecoder decoder_;
  Tape tape_;
};

}  // namespace xtx
