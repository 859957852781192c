#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

// Reverse-mode autodiff on a flat arena tape.
//
// Parameters live in a ParamStore and are referenced by integer id; activations
// live in a per-Tape arena of doubles. Ops run eagerly (values are available
// immediately) and append a record for the backward sweep. With recording
// switched off the same ops become plain inference calls, which is what action
// selection and TD target evaluation use.

namespace xtx {

struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  int size() const {
    int n = 1;
    for (int d : shape) n *= d;
    return n;
  }
};

struct OptimizerConfig {
  enum class Rule { Sgd, Adam };
  Rule rule = Rule::Adam;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;  // global norm across all parameters; <=0 disables
};

class ParamStore {
 public:
  // Registers a parameter filled with zeros. Name must be unique.
  int add(const std::string& name, std::vector<int> shape);

  int find(const std::string& name) const;  // -1 when absent
  int count() const { return static_cast<int>(entries_.size()); }

  const std::string& name(int id) const { return entries_[id].name; }
  const std::vector<int>& shape(int id) const { return entries_[id].value.shape; }
  int size(int id) const { return entries_[id].value.size(); }

  std::vector<double>& values(int id) { return entries_[id].value.v; }
  const std::vector<double>& values(int id) const { return entries_[id].value.v; }
  std::vector<double>& grads(int id) { return entries_[id].grad; }
  const std::vector<double>& grads(int id) const { return entries_[id].grad; }

  void zero_grad();
  // Re-draws every value uniformly from [-range, range] and clears optimizer state.
  void init_uniform(std::mt19937_64& rng, double range);

  // Clips the global gradient norm, applies the update rule, then zeroes grads.
  // Throws std::runtime_error if any gradient is non-finite.
  void step(const OptimizerConfig& cfg);

  int64_t steps_taken() const { return step_count_; }
  double total_grad_norm() const;

  void save(const std::string& path) const;
  void load(const std::string& path);  // shapes/names must match this store

 private:
  struct Entry {
    std::string name;
    Tensor value;
    std::vector<double> grad;
    std::vector<double> m1, m2;  // Adam moments, allocated on first Adam step
  };
  std::vector<Entry> entries_;
  int64_t step_count_ = 0;
};

class Tape {
 public:
  struct Slot {
    int off = -1;
    int len = 0;
  };

  explicit Tape(ParamStore& params) : ps_(&params) {}

  // Drops all activations and records; keeps arena capacity.
  void reset();

  void set_recording(bool on) { recording_ = on; }
  bool recording() const { return recording_; }

  std::span<const double> value(Slot s) const { return {val_.data() + s.off, static_cast<size_t>(s.len)}; }
  double scalar(Slot s) const;

  Slot input(std::span<const double> xs);      // constant leaf
  Slot zeros(int n);                           // constant zero leaf
  Slot param_vector(int pid);                  // copy of a 1-D parameter, grads flow back

  Slot matvec(int w, Slot x);                  // W:(rows,cols) * x
  Slot affine(int w, int b, Slot x);           // W x + b
  Slot embed_row(int e, int token);            // E:(vocab,dim) row lookup
  Slot embed_mean(int e, std::span<const int> tokens);  // mean of rows

  Slot add(Slot a, Slot b);
  Slot sub(Slot a, Slot b);
  Slot mul(Slot a, Slot b);                    // elementwise
  Slot tanh_(Slot a);
  Slot sigmoid_(Slot a);
  Slot relu_(Slot a);
  Slot concat(Slot a, Slot b);
  Slot scale(Slot a, double c);

  Slot stack_scalars(std::span<const Slot> xs);
  // Weighted sum of scalar slots: sum_i coeffs[i] * xs[i].
  Slot weighted_sum(std::span<const Slot> xs, std::span<const double> coeffs);
  Slot mean_scalars(std::span<const Slot> xs);

  // Numerically stable -log softmax(logits)[target].
  Slot ce_logits(Slot logits, int target);
  // (scalar - target)^2 with target treated as a constant.
  Slot sq_diff_const(Slot scalar, double target);

  // Seeds d(loss)=1 and sweeps the records in reverse, accumulating parameter
  // gradients into the store. Loss must be a scalar slot.
  void backward(Slot loss);

  size_t node_count() const { return recs_.size(); }

 private:
  enum class Op : uint8_t {
    MatVec, Affine, EmbedRow, EmbedMean, ParamVec,
    Add, Sub, Mul, Tanh, Sigmoid, Relu, Concat, Scale,
    Stack, WeightedSum, CeLogits, SqDiffConst,
  };

  struct Rec {
    Op op;
    Slot out, a, b;
    int pid = -1, pid2 = -1;
    int aux = 0;        // token id / target index
    int ext_off = 0;    // offset into ext_i_
    int ext_off2 = 0;   // offset into ext_d_
    int ext_len = 0;
    double c = 0.0;     // scalar constant
  };

  Slot alloc(int len);
  void push(const Rec& r) {
    if (recording_) recs_.push_back(r);
  }

  ParamStore* ps_;
  std::vector<double> val_;
  std::vector<double> grd_;
  std::vector<Rec> recs_;
  std::vector<int> ext_i_;     // token lists, stacked slot offsets
  std::vector<double> ext_d_;  // weighted-sum coefficients
  bool recording_ = true;
};

}  // namespace xtx
