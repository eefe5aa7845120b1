#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace varorder {

// Deterministic random stream with a fixed draw protocol: every normal()
// consumes exactly two engine outputs (Box-Muller, no cached spare) and
// uniform01() exactly one. Results therefore depend only on the seed and
// the sequence of calls, never on the standard library's distribution
// implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on (0,1); offset by half an ulp so 0 is never returned.
  double uniform01() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  std::uint64_t raw() { return gen_(); }

private:
  static constexpr double kTwoPi = 6.283185307179586476925286766559;
  std::mt19937_64 gen_;
};

// Replicate i of a run seeded with `base` uses its own stream seeded with
// base + i, so any subset of replicates can be reproduced in isolation.
inline std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t index) {
  return base + index;
}

}  // namespace varorder
