#include "xtx/policy_il.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace xtx {

void ILConfig::validate() const {
  if (vocab <= 0) throw std::invalid_argument("ILConfig: vocab must be positive");
  if (emb_dim <= 0 || hidden <= 0) throw std::invalid_argument("ILConfig: dims must be positive");
  if (batch <= 0) throw std::invalid_argument("ILConfig: batch must be positive");
  if (passes <= 0) throw std::invalid_argument("ILConfig: passes must be positive");
  if (init_range <= 0.0) throw std::invalid_argument("ILConfig: init_range must be positive");
}

namespace {
ILConfig checked(ILConfig cfg) {
  cfg.validate();
  return cfg;
}
}  // namespace

ILPolicy::ILPolicy(const ILConfig& cfg, std::mt19937_64& init_rng)
    : cfg_(checked(cfg)),
      ps_(),
      f_ctx_(ps_, "f_ctx", cfg.encoder, cfg.vocab, cfg.emb_dim, cfg.hidden),
      f_act_(ps_, "f_act", cfg.encoder, cfg.vocab, cfg.emb_dim, cfg.hidden),
      score_mlp_(ps_, "score", {2 * cfg.hidden, cfg.hidden, 1}),
      tape_(ps_) {
  ps_.init_uniform(init_rng, cfg.init_range);
}

Tape::Slot ILPolicy::score_slot(Tape::Slot ctx_r, std::span<const int> action_tokens) {
  return score_mlp_.forward(tape_, tape_.concat(ctx_r, f_act_.encode(tape_, action_tokens)));
}

std::vector<double> ILPolicy::scores(const Context& ctx,
                                     const std::vector<ActionCandidate>& valid) {
  if (valid.empty()) throw std::invalid_argument("ILPolicy::scores: empty valid set");
  tape_.reset();
  tape_.set_recording(false);
  Tape::Slot c = f_ctx_.encode(tape_, ctx.tokens());
  std::vector<double> out;
  out.reserve(valid.size());
  for (const auto& a : valid) out.push_back(tape_.scalar(score_slot(c, a.tokens)));
  tape_.set_recording(true);
  return out;
}

std::vector<double> ILPolicy::distribution(const Context& ctx,
                                           const std::vector<ActionCandidate>& valid) {
  return softmax_stable(scores(ctx, valid));
}

std::vector<double> ILPolicy::train(const TrajectoryBuffer& buffer, std::mt19937_64& rng) {
  std::vector<const Transition*> pairs;
  for (const auto& traj : buffer.trajectories)
    for (const auto& step : traj.steps) pairs.push_back(&step);
  if (pairs.empty()) throw std::invalid_argument("ILPolicy::train: buffer has no steps");

  if (!cfg_.warm_start) ps_.init_uniform(rng, cfg_.init_range);

  std::vector<double> curve;
  curve.reserve(cfg_.passes);
  std::vector<Tape::Slot> losses;
  for (int pass = 0; pass < cfg_.passes; ++pass) {
    shuffle_inplace(pairs, rng);
    double pass_sum = 0.0;
    for (size_t start = 0; start < pairs.size(); start += cfg_.batch) {
      size_t stop = std::min(pairs.size(), start + static_cast<size_t>(cfg_.batch));
      tape_.reset();
      losses.clear();
      for (size_t i = start; i < stop; ++i) {
        const Transition& tr = *pairs[i];
        Tape::Slot c = f_ctx_.encode(tape_, tr.context.tokens());
        std::vector<Tape::Slot> logit_slots;
        logit_slots.reserve(tr.valid_actions.size());
        for (const auto& a : tr.valid_actions) logit_slots.push_back(score_slot(c, a.tokens));
        Tape::Slot logits = tape_.stack_scalars(logit_slots);
        losses.push_back(tape_.ce_logits(logits, tr.action_index));
      }
      Tape::Slot mean = tape_.mean_scalars(losses);
      double v = tape_.scalar(mean);
      if (!std::isfinite(v)) throw std::runtime_error("ILPolicy::train: non-finite loss");
      pass_sum += v * static_cast<double>(stop - start);
      tape_.backward(mean);
      ps_.step(cfg_.opt);
    }
    curve.push_back(pass_sum / static_cast<double>(pairs.size()));
  }
  return curve;
}

}  // namespace xtx
