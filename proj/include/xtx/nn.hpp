#pragma once

#include <span>
#include <string>
#include <vector>

#include "xtx/tensor.hpp"

// Network building blocks shared by both policies: a small MLP, a token
// sequence encoder, and an autoregressive GRU token decoder.

namespace xtx {

// Max-subtracted softmax. Throws on an empty input.
std::vector<double> softmax_stable(std::span<const double> logits);

// -log(probs[target]) with the probability clamped at 1e-12.
double cross_entropy(std::span<const double> probs, int target);

// Index of the largest value; ties go to the lowest index.
int argmax(std::span<const double> xs);

// Fully connected net: tanh on hidden layers, linear output. dims = {in, ..., out}.
struct Mlp {
  std::vector<int> dims;
  std::vector<int> w_ids, b_ids;

  Mlp() = default;
  Mlp(ParamStore& ps, const std::string& prefix, std::vector<int> layer_dims);
  Tape::Slot forward(Tape& t, Tape::Slot x) const;
};

struct GruCell {
  int in_dim = 0, hidden = 0;
  int wz = -1, uz = -1, bz = -1;
  int wr = -1, ur = -1, br = -1;
  int wh = -1, uh = -1, bh = -1;

  GruCell() = default;
  GruCell(ParamStore& ps, const std::string& prefix, int in_dim, int hidden);
  Tape::Slot step(Tape& t, Tape::Slot x, Tape::Slot h) const;
};

enum class EncoderKind { MeanMlp, Gru };

EncoderKind parse_encoder_kind(const std::string& s);  // "mean" | "gru"

// Maps a token sequence to a fixed-size vector. MeanMlp averages embeddings and
// applies one tanh layer; Gru runs a recurrent pass and returns the last state.
struct SequenceEncoder {
  EncoderKind kind = EncoderKind::MeanMlp;
  int vocab = 0, emb_dim = 0, out_dim = 0;
  int emb = -1;
  int w = -1, b = -1;  // MeanMlp projection
  GruCell cell;        // Gru variant

  SequenceEncoder() = default;
  SequenceEncoder(ParamStore& ps, const std::string& prefix, EncoderKind kind,
                  int vocab, int emb_dim, int out_dim);
  // Throws std::invalid_argument on an empty sequence.
  Tape::Slot encode(Tape& t, std::span<const int> tokens) const;
};

// Teacher-forced conditional token decoder. Produces the summed per-token
// negative log-likelihood of a sequence given a conditioning vector.
struct GruDecoder {
  int vocab = 0, emb_dim = 0, hidden = 0;
  int emb = -1, start = -1, w_out = -1, b_out = -1;
  GruCell cell;

  GruDecoder() = default;
  GruDecoder(ParamStore& ps, const std::string& prefix, int vocab, int emb_dim, int hidden);
  // h0 must have length `hidden`; tokens must be non-empty and in range.
  Tape::Slot nll(Tape& t, Tape::Slot h0, std::span<const int> tokens) const;
};

}  // namespace xtx
