#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace metricseg {

// Counter-based 64-bit generator: draw k of stream `seed` is the SplitMix64
// finalizer applied to seed + (k + 1) * golden-ratio increment. Identical on
// every platform, and any draw can be recomputed from (seed, k) alone.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0) : seed_(seed), counter_(counter) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t at(std::uint64_t seed, std::uint64_t counter) {
    return mix(seed + (counter + 1) * 0x9E3779B97F4A7C15ULL);
  }

  std::uint64_t next_u64() { return at(seed_, counter_++); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), by rejection so every value is equally likely.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = n == 0 ? 0 : (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r < limit) return r % n;
    }
  }

  // Standard normal via Box-Muller; one pair of uniforms per draw.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace metricseg
