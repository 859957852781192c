#include "xtx/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "xtx/rng.hpp"

namespace xtx {

// ---------------------------------------------------------------- ParamStore

int ParamStore::add(const std::string& name, std::vector<int> shape) {
  if (find(name) >= 0) throw std::invalid_argument("ParamStore: duplicate parameter name " + name);
  Entry e;
  e.name = name;
  e.value.shape = std::move(shape);
  int n = e.value.size();
  if (n <= 0) throw std::invalid_argument("ParamStore: parameter " + name + " has empty shape");
  e.value.v.assign(n, 0.0);
  e.grad.assign(n, 0.0);
  entries_.push_back(std::move(e));
  return static_cast<int>(entries_.size()) - 1;
}

int ParamStore::find(const std::string& name) const {
  for (size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return static_cast<int>(i);
  return -1;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) std::fill(e.grad.begin(), e.grad.end(), 0.0);
}

void ParamStore::init_uniform(std::mt19937_64& rng, double range) {
  for (auto& e : entries_) {
    for (double& x : e.value.v) x = uniform_range(rng, -range, range);
    std::fill(e.grad.begin(), e.grad.end(), 0.0);
    e.m1.clear();
    e.m2.clear();
  }
  step_count_ = 0;
}

double ParamStore::total_grad_norm() const {
  double ss = 0.0;
  for (const auto& e : entries_)
    for (double g : e.grad) ss += g * g;
  return std::sqrt(ss);
}

void ParamStore::step(const OptimizerConfig& cfg) {
  for (const auto& e : entries_)
    for (double g : e.grad)
      if (!std::isfinite(g))
        throw std::runtime_error("optimizer step: non-finite gradient in parameter " + e.name);

  double scale = 1.0;
  if (cfg.clip_norm > 0.0) {
    double norm = total_grad_norm();
    if (norm > cfg.clip_norm) scale = cfg.clip_norm / norm;
  }

  step_count_ += 1;
  if (cfg.rule == OptimizerConfig::Rule::Sgd) {
    for (auto& e : entries_) {
      for (size_t i = 0; i < e.value.v.size(); ++i) e.value.v[i] -= cfg.lr * scale * e.grad[i];
    }
  } else {
    double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
    double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
    for (auto& e : entries_) {
      if (e.m1.empty()) {
        e.m1.assign(e.value.v.size(), 0.0);
        e.m2.assign(e.value.v.size(), 0.0);
      }
      for (size_t i = 0; i < e.value.v.size(); ++i) {
        double g = scale * e.grad[i];
        e.m1[i] = b1 * e.m1[i] + (1.0 - b1) * g;
        e.m2[i] = b2 * e.m2[i] + (1.0 - b2) * g * g;
        double mhat = e.m1[i] / bc1;
        double vhat = e.m2[i] / bc2;
        e.value.v[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
      }
    }
  }
  zero_grad();
}

void ParamStore::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint save: cannot open " + path);
  out << "xtx-checkpoint v1\n" << entries_.size() << "\n";
  char buf[64];
  for (const auto& e : entries_) {
    out << e.name << " " << e.value.shape.size();
    for (int d : e.value.shape) out << " " << d;
    out << "\n";
    for (size_t i = 0; i < e.value.v.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", e.value.v[i]);
      out << buf << (i + 1 < e.value.v.size() ? ' ' : '\n');
    }
  }
  if (!out) throw std::runtime_error("checkpoint save: write failed for " + path);
}

void ParamStore::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint load: cannot open " + path);
  std::string magic, version;
  in >> magic >> version;
  if (magic != "xtx-checkpoint" || version != "v1")
    throw std::runtime_error("checkpoint load: " + path + " is not an xtx-checkpoint v1 file");
  size_t n = 0;
  in >> n;
  if (n != entries_.size())
    throw std::runtime_error("checkpoint load: parameter count mismatch in " + path);
  for (auto& e : entries_) {
    std::string name;
    size_t ndim = 0;
    in >> name >> ndim;
    std::vector<int> shape(ndim);
    for (auto& d : shape) in >> d;
    if (name != e.name || shape != e.value.shape)
      throw std::runtime_error("checkpoint load: parameter " + name + " does not match registered " + e.name);
    for (double& x : e.value.v) in >> x;
    if (!in) throw std::runtime_error("checkpoint load: truncated values for " + name);
  }
}

// ---------------------------------------------------------------------- Tape

void Tape::reset() {
  val_.clear();
  grd_.clear();
  recs_.clear();
  ext_i_.clear();
  ext_d_.clear();
}

Tape::Slot Tape::alloc(int len) {
  Slot s{static_cast<int>(val_.size()), len};
  val_.resize(val_.size() + len, 0.0);
  return s;
}

double Tape::scalar(Slot s) const {
  if (s.len != 1) throw std::invalid_argument("Tape::scalar: slot is not a scalar");
  return val_[s.off];
}

Tape::Slot Tape::input(std::span<const double> xs) {
  Slot s = alloc(static_cast<int>(xs.size()));
  std::copy(xs.begin(), xs.end(), val_.begin() + s.off);
  return s;  // constant: no record needed
}

Tape::Slot Tape::zeros(int n) { return alloc(n); }

Tape::Slot Tape::param_vector(int pid) {
  const auto& v = ps_->values(pid);
  Slot s = alloc(static_cast<int>(v.size()));
  std::copy(v.begin(), v.end(), val_.begin() + s.off);
  push({Op::ParamVec, s, {}, {}, pid});
  return s;
}

Tape::Slot Tape::matvec(int w, Slot x) {
  const auto& shape = ps_->shape(w);
  if (shape.size() != 2) throw std::invalid_argument("matvec: weight " + ps_->name(w) + " is not 2-D");
  int rows = shape[0], cols = shape[1];
  if (cols != x.len)
    throw std::invalid_argument("matvec: shape mismatch for " + ps_->name(w));
  Slot y = alloc(rows);
  const double* W = ps_->values(w).data();
  const double* xv = val_.data() + x.off;
  double* yv = val_.data() + y.off;
  for (int r = 0; r < rows; ++r) {
    const double* wr = W + static_cast<size_t>(r) * cols;
    double acc = 0.0;
    for (int c = 0; c < cols; ++c) acc += wr[c] * xv[c];
    yv[r] = acc;
  }
  push({Op::MatVec, y, x, {}, w});
  return y;
}

Tape::Slot Tape::affine(int w, int b, Slot x) {
  const auto& shape = ps_->shape(w);
  if (shape.size() != 2) throw std::invalid_argument("affine: weight " + ps_->name(w) + " is not 2-D");
  int rows = shape[0], cols = shape[1];
  if (cols != x.len || ps_->size(b) != rows)
    throw std::invalid_argument("affine: shape mismatch for " + ps_->name(w));
  Slot y = alloc(rows);
  const double* W = ps_->values(w).data();
  const double* bv = ps_->values(b).data();
  const double* xv = val_.data() + x.off;
  double* yv = val_.data() + y.off;
  for (int r = 0; r < rows; ++r) {
    const double* wr = W + static_cast<size_t>(r) * cols;
    double acc = bv[r];
    for (int c = 0; c < cols; ++c) acc += wr[c] * xv[c];
    yv[r] = acc;
  }
  push({Op::Affine, y, x, {}, w, b});
  return y;
}

Tape::Slot Tape::embed_row(int e, int token) {
  const auto& shape = ps_->shape(e);
  if (shape.size() != 2) throw std::invalid_argument("embed_row: table " + ps_->name(e) + " is not 2-D");
  int vocab = shape[0], dim = shape[1];
  if (token < 0 || token >= vocab)
    throw std::invalid_argument("embed_row: token id out of range for " + ps_->name(e));
  Slot y = alloc(dim);
  const double* E = ps_->values(e).data() + static_cast<size_t>(token) * dim;
  std::copy(E, E + dim, val_.begin() + y.off);
  Rec r{Op::EmbedRow, y, {}, {}, e};
  r.aux = token;
  push(r);
  return y;
}

Tape::Slot Tape::embed_mean(int e, std::span<const int> tokens) {
  const auto& shape = ps_->shape(e);
  if (shape.size() != 2) throw std::invalid_argument("embed_mean: table " + ps_->name(e) + " is not 2-D");
  int vocab = shape[0], dim = shape[1];
  if (tokens.empty()) throw std::invalid_argument("embed_mean: empty token sequence");
  for (int t : tokens)
    if (t < 0 || t >= vocab)
      throw std::invalid_argument("embed_mean: token id out of range for " + ps_->name(e));
  Slot y = alloc(dim);
  double* yv = val_.data() + y.off;
  const double* E = ps_->values(e).data();
  for (int t : tokens) {
    const double* row = E + static_cast<size_t>(t) * dim;
    for (int d = 0; d < dim; ++d) yv[d] += row[d];
  }
  double inv = 1.0 / static_cast<double>(tokens.size());
  for (int d = 0; d < dim; ++d) yv[d] *= inv;
  Rec r{Op::EmbedMean, y, {}, {}, e};
  r.ext_off = static_cast<int>(ext_i_.size());
  r.ext_len = static_cast<int>(tokens.size());
  if (recording_) ext_i_.insert(ext_i_.end(), tokens.begin(), tokens.end());
  push(r);
  return y;
}

Tape::Slot Tape::add(Slot a, Slot b) {
  if (a.len != b.len) throw std::invalid_argument("add: length mismatch");
  Slot y = alloc(a.len);
  for (int i = 0; i < a.len; ++i) val_[y.off + i] = val_[a.off + i] + val_[b.off + i];
  push({Op::Add, y, a, b});
  return y;
}

Tape::Slot Tape::sub(Slot a, Slot b) {
  if (a.len != b.len) throw std::invalid_argument("sub: length mismatch");
  Slot y = alloc(a.len);
  for (int i = 0; i < a.len; ++i) val_[y.off + i] = val_[a.off + i] - val_[b.off + i];
  push({Op::Sub, y, a, b});
  return y;
}

Tape::Slot Tape::mul(Slot a, Slot b) {
  if (a.len != b.len) throw std::invalid_argument("mul: length mismatch");
  Slot y = alloc(a.len);
  for (int i = 0; i < a.len; ++i) val_[y.off + i] = val_[a.off + i] * val_[b.off + i];
  push({Op::Mul, y, a, b});
  return y;
}

Tape::Slot Tape::tanh_(Slot a) {
  Slot y = alloc(a.len);
  for (int i = 0; i < a.len; ++i) val_[y.off + i] = std::tanh(val_[a.off + i]);
  push({Op::Tanh, y, a});
  return y;
}

Tape::Slot Tape::sigmoid_(Slot a) {
  Slot y = alloc(a.len);
  for (int i = 0; i < a.len; ++i) val_[y.off + i] = 1.0 / (1.0 + std::exp(-val_[a.off + i]));
  push({Op::Sigmoid, y, a});
  return y;
}

Tape::Slot Tape::relu_(Slot a) {
  Slot y = alloc(a.len);
  for (int i = 0; i < a.len; ++i) val_[y.off + i] = std::max(0.0, val_[a.off + i]);
  push({Op::Relu, y, a});
  return y;
}

Tape::Slot Tape::concat(Slot a, Slot b) {
  Slot y = alloc(a.len + b.len);
  std::copy(val_.begin() + a.off, val_.begin() + a.off + a.len, val_.begin() + y.off);
  std::copy(val_.begin() + b.off, val_.begin() + b.off + b.len, val_.begin() + y.off + a.len);
  push({Op::Concat, y, a, b});
  return y;
}

Tape::Slot Tape::scale(Slot a, double c) {
  Slot y = alloc(a.len);
  for (int i = 0; i < a.len; ++i) val_[y.off + i] = c * val_[a.off + i];
  Rec r{Op::Scale, y, a};
  r.c = c;
  push(r);
  return y;
}

Tape::Slot Tape::stack_scalars(std::span<const Slot> xs) {
  if (xs.empty()) throw std::invalid_argument("stack_scalars: empty list");
  Slot y = alloc(static_cast<int>(xs.size()));
  Rec r{Op::Stack, y};
  r.ext_off = static_cast<int>(ext_i_.size());
  r.ext_len = static_cast<int>(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].len != 1) throw std::invalid_argument("stack_scalars: non-scalar slot");
    val_[y.off + static_cast<int>(i)] = val_[xs[i].off];
    if (recording_) ext_i_.push_back(xs[i].off);
  }
  push(r);
  return y;
}

Tape::Slot Tape::weighted_sum(std::span<const Slot> xs, std::span<const double> coeffs) {
  if (xs.empty() || xs.size() != coeffs.size())
    throw std::invalid_argument("weighted_sum: empty or mismatched inputs");
  Slot y = alloc(1);
  Rec r{Op::WeightedSum, y};
  r.ext_off = static_cast<int>(ext_i_.size());
  r.ext_off2 = static_cast<int>(ext_d_.size());
  r.ext_len = static_cast<int>(xs.size());
  double acc = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].len != 1) throw std::invalid_argument("weighted_sum: non-scalar slot");
    acc += coeffs[i] * val_[xs[i].off];
    if (recording_) {
      ext_i_.push_back(xs[i].off);
      ext_d_.push_back(coeffs[i]);
    }
  }
  val_[y.off] = acc;
  push(r);
  return y;
}

Tape::Slot Tape::mean_scalars(std::span<const Slot> xs) {
  std::vector<double> coeffs(xs.size(), 1.0 / static_cast<double>(xs.size()));
  return weighted_sum(xs, coeffs);
}

Tape::Slot Tape::ce_logits(Slot logits, int target) {
  if (target < 0 || target >= logits.len)
    throw std::invalid_argument("ce_logits: target index out of range");
  Slot y = alloc(1);
  const double* lv = val_.data() + logits.off;
  double m = lv[0];
  for (int i = 1; i < logits.len; ++i) m = std::max(m, lv[i]);
  double se = 0.0;
  for (int i = 0; i < logits.len; ++i) se += std::exp(lv[i] - m);
  val_[y.off] = m + std::log(se) - lv[target];
  Rec r{Op::CeLogits, y, logits};
  r.aux = target;
  push(r);
  return y;
}

Tape::Slot Tape::sq_diff_const(Slot s, double target) {
  if (s.len != 1) throw std::invalid_argument("sq_diff_const: slot is not a scalar");
  Slot y = alloc(1);
  double d = val_[s.off] - target;
  val_[y.off] = d * d;
  Rec r{Op::SqDiffConst, y, s};
  r.c = target;
  push(r);
  return y;
}

void Tape::backward(Slot loss) {
  if (loss.len != 1) throw std::invalid_argument("backward: loss is not a scalar");
  if (!recording_) throw std::runtime_error("backward: tape was not recording");
  grd_.assign(val_.size(), 0.0);
  grd_[loss.off] = 1.0;

  for (auto it = recs_.rbegin(); it != recs_.rend(); ++it) {
    const Rec& r = *it;
    const double* go = grd_.data() + r.out.off;
    switch (r.op) {
      case Op::MatVec: {
        int rows = r.out.len, cols = r.a.len;
        const double* W = ps_->values(r.pid).data();
        double* gW = ps_->grads(r.pid).data();
        const double* xv = val_.data() + r.a.off;
        double* gx = grd_.data() + r.a.off;
        for (int row = 0; row < rows; ++row) {
          double g = go[row];
          if (g == 0.0) continue;
          const double* wr = W + static_cast<size_t>(row) * cols;
          double* gwr = gW + static_cast<size_t>(row) * cols;
          for (int c = 0; c < cols; ++c) {
            gwr[c] += g * xv[c];
            gx[c] += g * wr[c];
          }
        }
        break;
      }
      case Op::Affine: {
        int rows = r.out.len, cols = r.a.len;
        const double* W = ps_->values(r.pid).data();
        double* gW = ps_->grads(r.pid).data();
        double* gb = ps_->grads(r.pid2).data();
        const double* xv = val_.data() + r.a.off;
        double* gx = grd_.data() + r.a.off;
        for (int row = 0; row < rows; ++row) {
          double g = go[row];
          if (g == 0.0) continue;
          gb[row] += g;
          const double* wr = W + static_cast<size_t>(row) * cols;
          double* gwr = gW + static_cast<size_t>(row) * cols;
          for (int c = 0; c < cols; ++c) {
            gwr[c] += g * xv[c];
            gx[c] += g * wr[c];
          }
        }
        break;
      }
      case Op::EmbedRow: {
        int dim = r.out.len;
        double* gE = ps_->grads(r.pid).data() + static_cast<size_t>(r.aux) * dim;
        for (int d = 0; d < dim; ++d) gE[d] += go[d];
        break;
      }
      case Op::EmbedMean: {
        int dim = r.out.len;
        double inv = 1.0 / static_cast<double>(r.ext_len);
        double* gE = ps_->grads(r.pid).data();
        for (int i = 0; i < r.ext_len; ++i) {
          int token = ext_i_[r.ext_off + i];
          double* row = gE + static_cast<size_t>(token) * dim;
          for (int d = 0; d < dim; ++d) row[d] += inv * go[d];
        }
        break;
      }
      case Op::ParamVec: {
        double* gp = ps_->grads(r.pid).data();
        for (int i = 0; i < r.out.len; ++i) gp[i] += go[i];
        break;
      }
      case Op::Add: {
        double* ga = grd_.data() + r.a.off;
        double* gb = grd_.data() + r.b.off;
        for (int i = 0; i < r.out.len; ++i) {
          ga[i] += go[i];
          gb[i] += go[i];
        }
        break;
      }
      case Op::Sub: {
        double* ga = grd_.data() + r.a.off;
        double* gb = grd_.data() + r.b.off;
        for (int i = 0; i < r.out.len; ++i) {
          ga[i] += go[i];
          gb[i] -= go[i];
        }
        break;
      }
      case Op::Mul: {
        double* ga = grd_.data() + r.a.off;
        double* gb = grd_.data() + r.b.off;
        const double* av = val_.data() + r.a.off;
        const double* bv = val_.data() + r.b.off;
        for (int i = 0; i < r.out.len; ++i) {
          ga[i] += go[i] * bv[i];
          gb[i] += go[i] * av[i];
        }
        break;
      }
      case Op::Tanh: {
        double* ga = grd_.data() + r.a.off;
        const double* yv = val_.data() + r.out.off;
        for (int i = 0; i < r.out.len; ++i) ga[i] += go[i] * (1.0 - yv[i] * yv[i]);
        break;
      }
      case Op::Sigmoid: {
        double* ga = grd_.data() + r.a.off;
        const double* yv = val_.data() + r.out.off;
        for (int i = 0; i < r.out.len; ++i) ga[i] += go[i] * yv[i] * (1.0 - yv[i]);
        break;
      }
      case Op::Relu: {
        double* ga = grd_.data() + r.a.off;
        const double* av = val_.data() + r.a.off;
        for (int i = 0; i < r.out.len; ++i)
          if (av[i] > 0.0) ga[i] += go[i];
        break;
      }
      case Op::Concat: {
        double* ga = grd_.data() + r.a.off;
        double* gb = grd_.data() + r.b.off;
        for (int i = 0; i < r.a.len; ++i) ga[i] += go[i];
        for (int i = 0; i < r.b.len; ++i) gb[i] += go[r.a.len + i];
        break;
      }
      case Op::Scale: {
        double* ga = grd_.data() + r.a.off;
        for (int i = 0; i < r.out.len; ++i) ga[i] += r.c * go[i];
        break;
      }
      case Op::Stack: {
        for (int i = 0; i < r.ext_len; ++i) grd_[ext_i_[r.ext_off + i]] += go[i];
        break;
      }
      case Op::WeightedSum: {
        double g = go[0];
        for (int i = 0; i < r.ext_len; ++i)
          grd_[ext_i_[r.ext_off + i]] += g * ext_d_[r.ext_off2 + i];
        break;
      }
      case Op::CeLogits: {
        // d/dl_i = softmax(l)_i - [i == target]
        double g = go[0];
        if (g == 0.0) break;
        const double* lv = val_.data() + r.a.off;
        double* gl = grd_.data() + r.a.off;
        double m = lv[0];
        for (int i = 1; i < r.a.len; ++i) m = std::max(m, lv[i]);
        double se = 0.0;
        for (int i = 0; i < r.a.len; ++i) se += std::exp(lv[i] - m);
        for (int i = 0; i < r.a.len; ++i) gl[i] += g * std::exp(lv[i] - m) / se;
        gl[r.aux] -= g;
        break;
      }
      case Op::SqDiffConst: {
        grd_[r.a.off] += go[0] * 2.0 * (val_[r.a.off] - r.c);
        break;
      }
    }
  }
}

}  // namespace xtx
