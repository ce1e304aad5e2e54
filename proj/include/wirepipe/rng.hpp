#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace wirepipe {

/// Deterministic RNG helpers. std::*_distribution output is
/// implementation-defined, so sampling is done with fixed arithmetic on
/// raw mt19937_64 draws: same seed means same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  /// Uniform double in [0,1).
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). n must be positive.
  std::int64_t uniform_int(std::int64_t n) {
    return static_cast<std::int64_t>(uniform01() * static_cast<double>(n));
  }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Standard normal via Box-Muller (deterministic, no cached spare).
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::mt19937_64 gen_;
};

/// splitmix64; used to derive independent per-item seeds from a base seed
/// so parallel generation order never changes outputs.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace wirepipe
