#pragma once

#include <cmath>
#include <cstdint>

namespace mvdepth {

/// Deterministic splitmix64 generator. Every stochastic routine in the toolkit
/// takes one of these (or a seed) explicitly so results are reproducible and
/// independent of threading.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform index in [0, n). n must be > 0.
  uint32_t uniform_index(uint32_t n) { return static_cast<uint32_t>(next_u64() % n); }

  /// Standard normal via Box-Muller (one value per call, no cached spare).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  uint64_t state_;
};

}  // namespace mvdepth
