#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace roadbird {

/// Seeded random stream owned by a single simulation run.
///
/// All draws are derived from raw mt19937_64 output so that identical seeds
/// produce identical streams on every platform. std::mt19937_64 is fully
/// specified by the standard; the std distribution adaptors are not, so they
/// are never used here.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform draw on (0, 1], 53-bit granularity. Zero is excluded so that
  /// -log(u) is always finite.
  double uniform01() {
    const std::uint64_t bits = engine_() >> 11;  // 53 bits
    return (static_cast<double>(bits) + 1.0) * 0x1p-53;
  }

  /// Uniform draw on [0, 1).
  double uniform01_halfopen() {
    return static_cast<double>(engine_() >> 11) * 0x1p-53;
  }

  /// Uniform draw on [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01_halfopen();
  }

  /// Uniform index in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(engine_() % n);
  }

  /// True with probability p.
  bool bernoulli(double p) { return uniform01() <= p; }

  /// Poisson count by Knuth inversion; intended for small means.
  int poisson(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform01();
    } while (p > limit);
    return k - 1;
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace roadbird
