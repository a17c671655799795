#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "tart/types.hpp"

namespace tart {

/// SplitMix64 finalizer; used to fold (seed, tag...) tuples into independent
/// substream seeds so that per-example / per-epoch randomness is reproducible
/// no matter how the surrounding loops are scheduled.
inline std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Folds a base seed and an arbitrary list of integer tags into one
/// substream seed, e.g. derive_seed(seed, kStreamAttack, epoch).
template <class... Tags>
std::uint64_t derive_seed(std::uint64_t seed, Tags... tags) {
  std::uint64_t h = mix64(seed);
  ((h = mix64(h ^ mix64(static_cast<std::uint64_t>(tags)))), ...);
  return h;
}

/// Deterministic random stream. All sampling helpers are written out
/// explicitly (no std::*_distribution) so a given engine state always maps
/// to the same doubles, bit for bit, across runs of the same binary.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(mix64(seed)) {}

  /// Independent substream keyed by (seed, tags...).
  template <class... Tags>
  static Rng stream(std::uint64_t seed, Tags... tags) {
    return Rng(derive_seed(seed, tags...));
  }

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * EIGEN_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  Vector normal_vector(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Matrix normal_matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index c = 0; c < cols; ++c)
      for (Index r = 0; r < rows; ++r) m(r, c) = normal();
    return m;
  }

  /// Fisher-Yates; modulo bias is irrelevant at these sizes.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      std::size_t j = i + static_cast<std::size_t>(next_u64() % (v.size() - i));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream tags. Keeping them in one place avoids accidental collisions
// between modules that derive substreams from the same run seed.
inline constexpr std::uint64_t kStreamFrame = 0x66726d65;    // dataset frame
inline constexpr std::uint64_t kStreamTrainSplit = 0x7472;   // train examples
inline constexpr std::uint64_t kStreamTestSplit = 0x7465;    // test examples
inline constexpr std::uint64_t kStreamInit = 0x696e6974;     // weight init
inline constexpr std::uint64_t kStreamShuffle = 0x73686600;  // epoch shuffle
inline constexpr std::uint64_t kStreamAttack = 0x61747431;   // training attack
inline constexpr std::uint64_t kStreamEval = 0x65766c31;     // evaluation attack

}  // namespace tart
