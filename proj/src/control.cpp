#include "xtx/control.hpp"

#include <algorithm>
#include <stdexcept>

namespace xtx {

const std::vector<std::string>& variant_names() {
  static const std::vector<std::string> names = {"xtx",     "xtx-uniform", "xtx-nomix", "drrn",
                                                 "lambda0", "lambda05",    "lambda1"};
  return names;
}

std::string variant_name(Variant v) { return variant_names()[static_cast<int>(v)]; }

Variant parse_variant(const std::string& name) {
  const auto& names = variant_names();
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<Variant>(i);
  std::string msg = "unknown variant '" + name + "'; valid variants:";
  for (const auto& n : names) msg += " " + n;
  throw std::invalid_argument(msg);
}

VariantTraits traits_for(Variant v) {
  VariantTraits t;
  switch (v) {
    case Variant::Xtx:
      break;
    case Variant::XtxUniform:
      t.explore_uniform = true;
      break;
    case Variant::XtxNoMix:
      t.exploit_pure_il = true;
      break;
    case Variant::Drrn:
      t.phases = false;
      t.fixed_lambda = 1.0;
      t.train_il = false;
      t.refresh = false;
      t.zero_alphas = true;
      t.zero_rho = true;
      break;
    case Variant::Lambda0:
      t.phases = false;
      t.fixed_lambda = 0.0;
      break;
    case Variant::Lambda05:
      t.phases = false;
      t.fixed_lambda = 0.5;
      break;
    case Variant::Lambda1:
      t.phases = false;
      t.fixed_lambda = 1.0;
      t.train_il = false;  // the imitation policy is never consulted
      break;
  }
  return t;
}

Phase select_phase(PhaseState& st) {
  if (!st.latched_explore && st.episode_score < st.M && st.t < st.T - st.R)
    return Phase::Exploit;
  st.latched_explore = true;
  return Phase::Explore;
}

std::vector<double> mixture_distribution(double lambda, std::span<const double> a,
                                         std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("mixture_distribution: mismatched supports");
  if (a.empty()) throw std::invalid_argument("mixture_distribution: empty distributions");
  if (lambda < 0.0 || lambda > 1.0)
    throw std::invalid_argument("mixture_distribution: lambda must be in [0, 1]");
  if (lambda == 1.0) return {a.begin(), a.end()};
  if (lambda == 0.0) return {b.begin(), b.end()};
  std::vector<double> out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = lambda * a[i] + (1.0 - lambda) * b[i];
  return out;
}

Controller::Controller(Environment& env, QNetwork& qnet, ILPolicy& il, ReplayBuffer& replay,
                       TrajectoryStore& store, VariantTraits traits, ControlConfig cfg,
                       ControlRngs& rngs)
    : env_(env),
      qnet_(qnet),
      il_(il),
      replay_(replay),
      store_(store),
      traits_(traits),
      cfg_(cfg),
      rngs_(rngs) {
  if (cfg_.initial_T <= 0 || cfg_.R < 0)
    throw std::invalid_argument("Controller: initial_T must be positive and R non-negative");
  state_.T = cfg_.initial_T;
  state_.R = cfg_.R;
  if (traits_.zero_alphas) cfg_.weights = IntrinsicWeights{0.0, 0.0, 0.0};
  if (traits_.zero_rho) cfg_.rho = 0.0;
}

EpisodeStats Controller::run_episode() {
  state_.begin_episode();

  StepResult sr = env_.reset();
  Observation obs = sr.observation;
  std::vector<ActionCandidate> valid = sr.valid_actions;
  Context ctx = initial_context(obs);

  Trajectory traj;
  traj.id = next_traj_id_++;

  EpisodeStats stats;
  stats.trajectory_id = traj.id;
  bool done = sr.done;

  while (!done && state_.t < state_.T) {
    state_.t += 1;

    Phase phase = traits_.phases ? select_phase(state_) : Phase::Explore;
    double lambda;
    if (traits_.phases)
      lambda = phase == Phase::Exploit
                   ? (traits_.exploit_pure_il ? 0.0 : state_.lambda_exploit())
                   : 1.0;
    else
      lambda = traits_.fixed_lambda;

    std::vector<double> dist;
    std::vector<double> inv_d, il_d;
    bool uniform_now = traits_.explore_uniform && phase == Phase::Explore;
    if (lambda > 0.0) {
      if (uniform_now)
        inv_d.assign(valid.size(), 1.0 / static_cast<double>(valid.size()));
      else
        inv_d = qnet_.policy_distribution(obs, valid);
    }
    if (lambda < 1.0) il_d = il_.distribution(ctx, valid);
    if (lambda == 1.0)
      dist = std::move(inv_d);
    else if (lambda == 0.0)
      dist = std::move(il_d);
    else
      dist = mixture_distribution(lambda, inv_d, il_d);

    int a = sample_categorical(dist, rngs_.action);
    StepResult next = env_.step(valid[a]);

    Transition tr;
    tr.context = ctx;
    tr.valid_actions = valid;
    tr.action_index = a;
    tr.reward = next.reward;
    tr.next_observation = next.observation;
    tr.next_valid_actions = next.valid_actions;
    tr.terminal = next.done;
    tr.trajectory_id = traj.id;
    tr.step_index = state_.t - 1;
    replay_.push(tr);
    traj.steps.push_back(std::move(tr));

    state_.episode_score += next.reward;
    if (phase == Phase::Exploit) stats.phase1_steps += 1;

    if (state_.t % cfg_.update_every == 0) {
      auto batch = replay_.sample_batch(cfg_.batch, cfg_.rho, rngs_.replay);
      qnet_.td_update(batch, cfg_.weights);
    }

    ctx = advance_context(ctx, valid[a].tokens, next.observation);
    obs = std::move(next.observation);
    valid = std::move(next.valid_actions);
    done = next.done;
  }

  stats.score = state_.episode_score;
  stats.length = state_.t;
  replay_.end_episode(traj);
  if (traits_.refresh) store_.add(traj);
  return stats;
}

bool Controller::maybe_retrain() {
  if (!traits_.refresh) return false;
  state_.episodes_since_retrain += 1;
  if (state_.episodes_since_retrain < cfg_.retrain_interval || store_.empty()) return false;
  state_.episodes_since_retrain = 0;

  TrajectoryBuffer buf = store_.refresh_buffer(cfg_.k, cfg_.beta1, cfg_.beta2, rngs_.sampler);
  if (traits_.train_il) il_.train(buf, rngs_.il);
  state_.M = buf.max_score;
  state_.l_max = buf.max_length;
  state_.T = state_.l_max + state_.R;
  return true;
}

}  // namespace xtx
