#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

// Deterministic randomness utilities. Every consumer of randomness in a run
// gets its own named engine derived from the run seed, so adding draws to one
// component never perturbs another.

namespace xtx {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

// Independent engine for the (seed, tag) pair.
inline std::mt19937_64 make_stream(uint64_t master, std::string_view tag) {
  uint64_t s = master ^ fnv1a(tag);
  uint64_t a = splitmix64(s);
  uint64_t b = splitmix64(s);
  std::seed_seq seq{static_cast<uint32_t>(a), static_cast<uint32_t>(a >> 32),
                    static_cast<uint32_t>(b), static_cast<uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

// [0,1). Hand-rolled so draws do not depend on libstdc++ distribution details.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

// Unbiased integer in [0,n) by rejection.
inline int uniform_int(std::mt19937_64& g, int n) {
  if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
  uint64_t un = static_cast<uint64_t>(n);
  uint64_t threshold = (0 - un) % un;
  for (;;) {
    uint64_t r = g();
    if (r >= threshold) return static_cast<int>(r % un);
  }
}

// Inverse-CDF draw from a normalized distribution.
inline int sample_categorical(std::span<const double> probs, std::mt19937_64& g) {
  if (probs.empty()) throw std::invalid_argument("sample_categorical: empty distribution");
  double u = uniform01(g);
  double c = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    c += probs[i];
    if (u < c) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;  // guard against rounding at the top
}

template <class T>
void shuffle_inplace(std::vector<T>& xs, std::mt19937_64& g) {
  for (int i = static_cast<int>(xs.size()) - 1; i > 0; --i) {
    int j = uniform_int(g, i + 1);
    std::swap(xs[i], xs[j]);
  }
}

}  // namespace xtx
