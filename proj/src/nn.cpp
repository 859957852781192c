#include "xtx/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace xtx {

std::vector<double> softmax_stable(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax_stable: empty input");
  double m = logits[0];
  for (double x : logits) m = std::max(m, x);
  std::vector<double> out(logits.size());
  double se = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    se += out[i];
  }
  for (double& p : out) p /= se;
  return out;
}

double cross_entropy(std::span<const double> probs, int target) {
  if (target < 0 || target >= static_cast<int>(probs.size()))
    throw std::invalid_argument("cross_entropy: target index out of range");
  return -std::log(std::max(probs[target], 1e-12));
}

int argmax(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("argmax: empty input");
  int best = 0;
  for (size_t i = 1; i < xs.size(); ++i)
    if (xs[i] > xs[best]) best = static_cast<int>(i);
  return best;
}

Mlp::Mlp(ParamStore& ps, const std::string& prefix, std::vector<int> layer_dims)
    : dims(std::move(layer_dims)) {
  if (dims.size() < 2) throw std::invalid_argument("Mlp: need at least input and output dims");
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    w_ids.push_back(ps.add(prefix + ".w" + std::to_string(l), {dims[l + 1], dims[l]}));
    b_ids.push_back(ps.add(prefix + ".b" + std::to_string(l), {dims[l + 1]}));
  }
}

Tape::Slot Mlp::forward(Tape& t, Tape::Slot x) const {
  Tape::Slot h = x;
  for (size_t l = 0; l < w_ids.size(); ++l) {
    h = t.affine(w_ids[l], b_ids[l], h);
    if (l + 1 < w_ids.size()) h = t.tanh_(h);
  }
  return h;
}

GruCell::GruCell(ParamStore& ps, const std::string& prefix, int in, int hid)
    : in_dim(in), hidden(hid) {
  wz = ps.add(prefix + ".wz", {hid, in});
  uz = ps.add(prefix + ".uz", {hid, hid});
  bz = ps.add(prefix + ".bz", {hid});
  wr = ps.add(prefix + ".wr", {hid, in});
  ur = ps.add(prefix + ".ur", {hid, hid});
  br = ps.add(prefix + ".br", {hid});
  wh = ps.add(prefix + ".wh", {hid, in});
  uh = ps.add(prefix + ".uh", {hid, hid});
  bh = ps.add(prefix + ".bh", {hid});
}

Tape::Slot GruCell::step(Tape& t, Tape::Slot x, Tape::Slot h) const {
  Tape::Slot z = t.sigmoid_(t.add(t.affine(wz, bz, x), t.matvec(uz, h)));
  Tape::Slot r = t.sigmoid_(t.add(t.affine(wr, br, x), t.matvec(ur, h)));
  Tape::Slot hc = t.tanh_(t.add(t.affine(wh, bh, x), t.matvec(uh, t.mul(r, h))));
  // h' = h + z * (hc - h)
  return t.add(h, t.mul(z, t.sub(hc, h)));
}

EncoderKind parse_encoder_kind(const std::string& s) {
  if (s == "mean") return EncoderKind::MeanMlp;
  if (s == "gru") return EncoderKind::Gru;
  throw std::invalid_argument("unknown encoder kind '" + s + "' (expected mean or gru)");
}

SequenceEncoder::SequenceEncoder(ParamStore& ps, const std::string& prefix, EncoderKind k,
                                 int voc, int edim, int odim)
    : kind(k), vocab(voc), emb_dim(edim), out_dim(odim) {
  if (voc <= 0 || edim <= 0 || odim <= 0)
    throw std::invalid_argument("SequenceEncoder: dims must be positive");
  emb = ps.add(prefix + ".emb", {voc, edim});
  if (kind == EncoderKind::MeanMlp) {
    w = ps.add(prefix + ".w", {odim, edim});
    b = ps.add(prefix + ".b", {odim});
  } else {
    cell = GruCell(ps, prefix + ".gru", edim, odim);
  }
}

Tape::Slot SequenceEncoder::encode(Tape& t, std::span<const int> tokens) const {
  if (tokens.empty()) throw std::invalid_argument("SequenceEncoder: empty token sequence");
  if (kind == EncoderKind::MeanMlp) {
    return t.tanh_(t.affine(w, b, t.embed_mean(emb, tokens)));
  }
  Tape::Slot h = t.zeros(out_dim);
  for (int tok : tokens) h = cell.step(t, t.embed_row(emb, tok), h);
  return h;
}

GruDecoder::GruDecoder(ParamStore& ps, const std::string& prefix, int voc, int edim, int hid)
    : vocab(voc), emb_dim(edim), hidden(hid) {
  if (voc <= 0 || edim <= 0 || hid <= 0)
    throw std::invalid_argument("GruDecoder: dims must be positive");
  emb = ps.add(prefix + ".emb", {voc, edim});
  start = ps.add(prefix + ".start", {edim});
  w_out = ps.add(prefix + ".w_out", {voc, hid});
  b_out = ps.add(prefix + ".b_out", {voc});
  cell = GruCell(ps, prefix + ".gru", edim, hid);
}

Tape::Slot GruDecoder::nll(Tape& t, Tape::Slot h0, std::span<const int> tokens) const {
  if (tokens.empty()) throw std::invalid_argument("GruDecoder: empty token sequence");
  if (h0.len != hidden) throw std::invalid_argument("GruDecoder: conditioning vector has wrong size");
  std::vector<Tape::Slot> terms;
  terms.reserve(tokens.size());
  Tape::Slot x = t.param_vector(start);
  Tape::Slot h = h0;
  for (size_t i = 0; i < tokens.size(); ++i) {
    int target = tokens[i];
    if (target < 0 || target >= vocab)
      throw std::invalid_argument("GruDecoder: token id out of range");
    h = cell.step(t, x, h);
    terms.push_back(t.ce_logits(t.affine(w_out, b_out, h), target));
    if (i + 1 < tokens.size()) x = t.embed_row(emb, target);
  }
  std::vector<double> ones(terms.size(), 1.0);
  return t.weighted_sum(terms, ones);
}

}  // namespace xtx
