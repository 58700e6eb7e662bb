#ifndef AVIEB_RNG_HPP
#define AVIEB_RNG_HPP

#include "avieb/core.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>

namespace avieb {

/// SplitMix64 generator. The output sequence, the uniform mapping and the
/// Box-Muller normal mapping are all fixed here (see docs/prng.md) so that
/// every instance and sample stream is reproducible bit-for-bit on any
/// platform and in other language ports.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer uniform on [0, bound). Modulo bias is irrelevant at our sizes.
  std::uint64_t below(std::uint64_t bound) { return bound == 0 ? 0 : next() % bound; }

  /// Standard normal via Box-Muller; consumes exactly two uniforms per call.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Vector normal_vector(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  Matrix normal_matrix(Index rows, Index cols) {
    Matrix a(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) a(i, j) = normal();
    return a;
  }

 private:
  std::uint64_t state_;
};

/// Seed of the stream used for task `index` under `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return SplitMix64::mix(master ^ SplitMix64::mix(index + 0x9E3779B97F4A7C15ULL));
}

}  // namespace avieb

#endif  // AVIEB_RNG_HPP
