#include "xtx/policy_invdy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace xtx {

void QNetConfig::validate() const {
  if (vocab <= 0) throw std::invalid_argument("QNetConfig: vocab must be positive");
  if (emb_dim <= 0 || hidden <= 0) throw std::invalid_argument("QNetConfig: dims must be positive");
  if (gamma <= 0.0 || gamma > 1.0) throw std::invalid_argument("QNetConfig: gamma must be in (0, 1]");
  if (init_range <= 0.0) throw std::invalid_argument("QNetConfig: init_range must be positive");
}

namespace {
QNetConfig checked(QNetConfig cfg) {
  cfg.validate();
  return cfg;
}
}  // namespace

QNetwork::QNetwork(const QNetConfig& cfg, std::mt19937_64& init_rng)
    : cfg_(checked(cfg)),
      ps_(),
      f_obs_(ps_, "f_obs", cfg.encoder, cfg.vocab, cfg.emb_dim, cfg.hidden),
      f_act_(ps_, "f_act", cfg.encoder, cfg.vocab, cfg.emb_dim, cfg.hidden),
      q_mlp_(ps_, "q", {2 * cfg.hidden, cfg.hidden, 1}),
      decoder_(ps_, "dec", cfg.vocab, cfg.emb_dim, cfg.hidden),
      tape_(ps_) {
  g_inv_w_ = ps_.add("g_inv.w", {cfg.hidden, 2 * cfg.hidden});
  g_inv_b_ = ps_.add("g_inv.b", {cfg.hidden});
  ps_.init_uniform(init_rng, cfg.init_range);
}

Tape::Slot QNetwork::obs_repr(std::span<const int> tokens) { return f_obs_.encode(tape_, tokens); }
Tape::Slot QNetwork::act_repr(std::span<const int> tokens) { return f_act_.encode(tape_, tokens); }

Tape::Slot QNetwork::q_slot(Tape::Slot obs_r, Tape::Slot act_r) {
  return q_mlp_.forward(tape_, tape_.concat(obs_r, act_r));
}

Tape::Slot QNetwork::inv_slot(Tape::Slot obs_r, Tape::Slot next_r,
                              std::span<const int> action_tokens) {
  Tape::Slot h0 = tape_.tanh_(tape_.affine(g_inv_w_, g_inv_b_, tape_.concat(obs_r, next_r)));
  return decoder_.nll(tape_, h0, action_tokens);
}

std::vector<double> QNetwork::q_values(const Observation& obs,
                                       const std::vector<ActionCandidate>& valid) {
  if (valid.empty()) throw std::invalid_argument("q_values: empty valid set");
  tape_.reset();
  tape_.set_recording(false);
  Tape::Slot o = obs_repr(obs.tokens);
  std::vector<double> out;
  out.reserve(valid.size());
  for (const auto& a : valid) out.push_back(tape_.scalar(q_slot(o, act_repr(a.tokens))));
  tape_.set_recording(true);
  return out;
}

std::vector<double> QNetwork::policy_distribution(const Observation& obs,
                                                  const std::vector<ActionCandidate>& valid) {
  return softmax_stable(q_values(obs, valid));
}

double QNetwork::inv_loss(const Observation& obs, const std::vector<int>& action_tokens,
                          const Observation& next_obs) {
  tape_.reset();
  tape_.set_recording(false);
  double v = tape_.scalar(inv_slot(obs_repr(obs.tokens), obs_repr(next_obs.tokens), action_tokens));
  tape_.set_recording(true);
  return v;
}

double QNetwork::dec_loss(const std::vector<int>& action_tokens) {
  tape_.reset();
  tape_.set_recording(false);
  double v = tape_.scalar(decoder_.nll(tape_, act_repr(action_tokens), action_tokens));
  tape_.set_recording(true);
  return v;
}

double QNetwork::intrinsic_reward(const Transition& t, double alpha1) {
  const auto& a = t.valid_actions[t.action_index];
  return t.reward + alpha1 * inv_loss(t.context.observation, a.tokens, t.next_observation);
}

TdLossReport QNetwork::td_update(const std::vector<const Transition*>& batch,
                                 const IntrinsicWeights& w) {
  if (batch.empty()) throw std::invalid_argument("td_update: empty batch");

  tape_.reset();
  std::vector<Tape::Slot> td_terms, inv_terms, dec_terms;
  td_terms.reserve(batch.size());

  bool need_inv = w.alpha1 != 0.0 || w.alpha2 != 0.0;
  bool need_dec = w.alpha3 != 0.0;
  double inv_sum = 0.0;

  for (const Transition* tp : batch) {
    const Transition& tr = *tp;
    if (tr.action_index < 0 || tr.action_index >= static_cast<int>(tr.valid_actions.size()))
      throw std::invalid_argument("td_update: transition action index out of range");
    const auto& act = tr.valid_actions[tr.action_index].tokens;

    Tape::Slot o = obs_repr(tr.context.observation.tokens);
    Tape::Slot a = act_repr(act);
    Tape::Slot q = q_slot(o, a);

    double inv_value = 0.0;
    if (need_inv) {
      Tape::Slot next_r = obs_repr(tr.next_observation.tokens);
      Tape::Slot inv = inv_slot(o, next_r, act);
      inv_value = tape_.scalar(inv);
      inv_sum += inv_value;
      if (w.alpha2 != 0.0) inv_terms.push_back(inv);
    }

    // Target is evaluated with recording off so no gradient flows through it.
    double target = tr.reward + w.alpha1 * inv_value;
    if (!tr.terminal) {
      if (tr.next_valid_actions.empty())
        throw std::runtime_error("td_update: non-terminal transition with empty next valid set");
      tape_.set_recording(false);
      Tape::Slot no = obs_repr(tr.next_observation.tokens);
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& cand : tr.next_valid_actions)
        best = std::max(best, tape_.scalar(q_slot(no, act_repr(cand.tokens))));
      tape_.set_recording(true);
      target += cfg_.gamma * best;
    }
    td_terms.push_back(tape_.sq_diff_const(q, target));

    if (need_dec) dec_terms.push_back(decoder_.nll(tape_, a, act));
  }

  TdLossReport rep;
  if (need_inv) rep.inv = inv_sum / static_cast<double>(batch.size());
  std::vector<Tape::Slot> parts;
  std::vector<double> coeffs;
  Tape::Slot td_mean = tape_.mean_scalars(td_terms);
  rep.td = tape_.scalar(td_mean);
  parts.push_back(td_mean);
  coeffs.push_back(1.0);
  if (!inv_terms.empty()) {
    parts.push_back(tape_.mean_scalars(inv_terms));
    coeffs.push_back(w.alpha2);
  }
  if (!dec_terms.empty()) {
    Tape::Slot dec_mean = tape_.mean_scalars(dec_terms);
    rep.dec = tape_.scalar(dec_mean);
    parts.push_back(dec_mean);
    coeffs.push_back(w.alpha3);
  }
  Tape::Slot total = tape_.weighted_sum(parts, coeffs);
  rep.total = tape_.scalar(total);
  if (!std::isfinite(rep.total)) throw std::runtime_error("td_update: non-finite loss");

  tape_.backward(total);
  ps_.step(cfg_.opt);
  return rep;
}

}  // namespace xtx
