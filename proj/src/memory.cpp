#include "xtx/memory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "xtx/nn.hpp"

namespace xtx {

std::vector<int> Context::tokens() const {
  std::vector<int> out;
  out.reserve(prev_action2.size() + prev_action1.size() + observation.tokens.size() + 2);
  out.insert(out.end(), prev_action2.begin(), prev_action2.end());
  out.push_back(kSepToken);
  out.insert(out.end(), prev_action1.begin(), prev_action1.end());
  out.push_back(kSepToken);
  out.insert(out.end(), observation.tokens.begin(), observation.tokens.end());
  return out;
}

Context initial_context(const Observation& obs) {
  Context c;
  c.prev_action2 = {kPadToken};
  c.prev_action1 = {kPadToken};
  c.observation = obs;
  return c;
}

Context advance_context(const Context& prev, const std::vector<int>& taken, const Observation& next) {
  Context c;
  c.prev_action2 = prev.prev_action1;
  c.prev_action1 = taken;
  c.observation = next;
  return c;
}

double Trajectory::score() const {
  double s = 0.0;
  for (const auto& t : steps) s += t.reward;
  return s;
}

// ------------------------------------------------------------ TrajectoryStore

TrajectoryStore::TrajectoryStore(size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("TrajectoryStore: capacity must be positive");
}

void TrajectoryStore::add(Trajectory traj) {
  if (traj.steps.empty()) throw std::invalid_argument("TrajectoryStore: empty trajectory");
  if (trajs_.count(traj.id)) throw std::invalid_argument("TrajectoryStore: duplicate trajectory id");
  double s = traj.score();
  by_score_[s].push_back(traj.id);
  trajs_.emplace(traj.id, std::move(traj));
  if (trajs_.size() > capacity_) evict_one();
}

void TrajectoryStore::evict_one() {
  // Oldest trajectory whose score group keeps another member. If every group
  // is a singleton the store grows past capacity rather than losing a score.
  for (const auto& [id, traj] : trajs_) {
    auto& group = by_score_[traj.score()];
    if (group.size() > 1) {
      group.erase(std::find(group.begin(), group.end(), id));
      trajs_.erase(id);
      return;
    }
  }
}

std::vector<double> TrajectoryStore::unique_scores() const {
  std::vector<double> out;
  out.reserve(by_score_.size());
  for (const auto& [s, ids] : by_score_) {
    (void)ids;
    out.push_back(s);
  }
  return out;
}

std::vector<std::pair<double, double>> TrajectoryStore::score_distribution(double beta1) const {
  if (trajs_.empty()) throw std::runtime_error("TrajectoryStore: no trajectories stored");
  std::vector<double> scores = unique_scores();
  size_t n = scores.size();
  double mu = 0.0;
  for (double s : scores) mu += s;
  mu /= static_cast<double>(n);
  double var = 0.0;
  for (double s : scores) var += (s - mu) * (s - mu);
  double sigma = std::sqrt(var / static_cast<double>(n));

  std::vector<std::pair<double, double>> out(n);
  if (sigma == 0.0) {
    for (size_t i = 0; i < n; ++i) out[i] = {scores[i], 1.0 / static_cast<double>(n)};
    return out;
  }
  std::vector<double> logits(n);
  for (size_t i = 0; i < n; ++i) logits[i] = beta1 * (scores[i] - mu) / sigma;
  std::vector<double> probs = softmax_stable(logits);
  for (size_t i = 0; i < n; ++i) out[i] = {scores[i], probs[i]};
  return out;
}

std::vector<std::pair<uint64_t, double>> TrajectoryStore::length_distribution(double score,
                                                                              double beta2) const {
  auto it = by_score_.find(score);
  if (it == by_score_.end())
    throw std::invalid_argument("TrajectoryStore: no trajectories with the requested score");
  const auto& ids = it->second;
  size_t n = ids.size();
  double mu = 0.0;
  for (uint64_t id : ids) mu += trajs_.at(id).length();
  mu /= static_cast<double>(n);
  double var = 0.0;
  for (uint64_t id : ids) {
    double d = trajs_.at(id).length() - mu;
    var += d * d;
  }
  double sigma = std::sqrt(var / static_cast<double>(n));

  std::vector<std::pair<uint64_t, double>> out(n);
  if (sigma == 0.0) {
    for (size_t i = 0; i < n; ++i) out[i] = {ids[i], 1.0 / static_cast<double>(n)};
    return out;
  }
  std::vector<double> logits(n);
  for (size_t i = 0; i < n; ++i)
    logits[i] = -beta2 * (trajs_.at(ids[i]).length() - mu) / sigma;
  std::vector<double> probs = softmax_stable(logits);
  for (size_t i = 0; i < n; ++i) out[i] = {ids[i], probs[i]};
  return out;
}

double TrajectoryStore::sample_score(double beta1, std::mt19937_64& rng) const {
  auto dist = score_distribution(beta1);
  std::vector<double> probs(dist.size());
  for (size_t i = 0; i < dist.size(); ++i) probs[i] = dist[i].second;
  return dist[sample_categorical(probs, rng)].first;
}

const Trajectory& TrajectoryStore::sample_trajectory(double score, double beta2,
                                                     std::mt19937_64& rng) const {
  auto dist = length_distribution(score, beta2);
  std::vector<double> probs(dist.size());
  for (size_t i = 0; i < dist.size(); ++i) probs[i] = dist[i].second;
  return trajs_.at(dist[sample_categorical(probs, rng)].first);
}

TrajectoryBuffer TrajectoryStore::refresh_buffer(int k, double beta1, double beta2,
                                                 std::mt19937_64& rng) const {
  if (trajs_.empty()) throw std::runtime_error("TrajectoryStore: refresh on empty store");
  if (k <= 0) throw std::invalid_argument("TrajectoryStore: k must be positive");
  TrajectoryBuffer buf;
  buf.max_score = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    double u = sample_score(beta1, rng);
    const Trajectory& t = sample_trajectory(u, beta2, rng);
    buf.trajectories.push_back(t);
    buf.max_score = std::max(buf.max_score, t.score());
    buf.max_length = std::max(buf.max_length, t.length());
  }
  return buf;
}

// --------------------------------------------------------------- ReplayBuffer

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (live_.size() >= capacity_) evict_one();

  int id;
  if (!free_.empty()) {
    id = free_.back();
    free_.pop_back();
  } else {
    id = static_cast<int>(slots_.size());
    slots_.emplace_back();
  }
  Slot& s = slots_[id];
  uint64_t traj = t.trajectory_id;
  s.t = std::move(t);
  s.seq = next_seq_++;
  s.live = true;
  s.marked = marked_trajs_.count(traj) > 0;
  s.live_pos = static_cast<int>(live_.size());
  live_.push_back(id);
  if (s.marked) {
    s.marked_pos = static_cast<int>(marked_live_.size());
    marked_live_.push_back(id);
  }
  fifo_.emplace_back(id, s.seq);
  traj_slots_[traj].push_back(id);
}

void ReplayBuffer::remove_slot(int id) {
  Slot& s = slots_[id];
  // swap-remove from the live list
  int back = live_.back();
  live_[s.live_pos] = back;
  slots_[back].live_pos = s.live_pos;
  live_.pop_back();
  if (s.marked) {
    int mb = marked_live_.back();
    marked_live_[s.marked_pos] = mb;
    slots_[mb].marked_pos = s.marked_pos;
    marked_live_.pop_back();
  }
  auto& ts = traj_slots_[s.t.trajectory_id];
  ts.erase(std::find(ts.begin(), ts.end(), id));
  if (ts.empty()) traj_slots_.erase(s.t.trajectory_id);
  s.live = false;
  s.marked = false;
  s.live_pos = s.marked_pos = -1;
  free_.push_back(id);
}

void ReplayBuffer::evict_one() {
  // Oldest unmarked transition goes first; marked ones are protected.
  for (size_t i = 0; i < fifo_.size(); ++i) {
    auto [id, seq] = fifo_[i];
    const Slot& s = slots_[id];
    if (!s.live || s.seq != seq) {  // stale entry, drop lazily
      fifo_.erase(fifo_.begin() + static_cast<long>(i));
      --i;
      continue;
    }
    if (!s.marked) {
      fifo_.erase(fifo_.begin() + static_cast<long>(i));
      remove_slot(id);
      return;
    }
  }
  throw std::runtime_error("ReplayBuffer: every stored transition is protected; raise capacity");
}

void ReplayBuffer::set_traj_marked(uint64_t traj, bool on) {
  auto it = traj_slots_.find(traj);
  if (it == traj_slots_.end()) return;
  for (int id : it->second) {
    Slot& s = slots_[id];
    if (s.marked == on) continue;
    s.marked = on;
    if (on) {
      s.marked_pos = static_cast<int>(marked_live_.size());
      marked_live_.push_back(id);
    } else {
      int mb = marked_live_.back();
      marked_live_[s.marked_pos] = mb;
      slots_[mb].marked_pos = s.marked_pos;
      marked_live_.pop_back();
      s.marked_pos = -1;
    }
  }
}

void ReplayBuffer::end_episode(const Trajectory& traj) {
  double s = traj.score();
  if (s > max_score_) {
    for (uint64_t old : marked_trajs_) set_traj_marked(old, false);
    marked_trajs_.clear();
    max_score_ = s;
    marked_trajs_.insert(traj.id);
    set_traj_marked(traj.id, true);
  } else if (s == max_score_) {
    if (marked_trajs_.insert(traj.id).second) set_traj_marked(traj.id, true);
  }
}

std::vector<const Transition*> ReplayBuffer::sample_batch(int batch, double rho,
                                                          std::mt19937_64& rng) const {
  if (live_.empty()) throw std::runtime_error("ReplayBuffer: sample from empty buffer");
  if (batch <= 0) throw std::invalid_argument("ReplayBuffer: batch must be positive");
  if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("ReplayBuffer: rho must be in [0, 1]");
  std::vector<const Transition*> out;
  out.reserve(batch);
  for (int i = 0; i < batch; ++i) {
    bool prioritized = rho > 0.0 && !marked_live_.empty() && uniform01(rng) < rho;
    const auto& pool = prioritized ? marked_live_ : live_;
    int id = pool[uniform_int(rng, static_cast<int>(pool.size()))];
    out.push_back(&slots_[id].t);
  }
  return out;
}

}  // namespace xtx
