#pragma once

#include <cmath>
#include <cstdint>

namespace gmd {

// Deterministic 64-bit generator (SplitMix64 state update). All randomness in
// the toolkit flows through this class so that datasets, initializations and
// sample draws are reproducible from a single integer seed, independent of
// platform RNG libraries.
//
// Derived draws are defined in terms of the raw 64-bit stream:
//   unit():     (next_u64() >> 11) * 2^-53            in [0, 1)
//   gaussian(): Box-Muller, sqrt(-2 ln u1) * cos(2 pi u2), u1 in (0, 1];
//               consumes exactly two 64-bit draws per call (no cached spare)
//   below(n):   rejection sampling on the top range, unbiased
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  double gaussian() {
    const double u1 = 1.0 - unit();  // (0, 1], keeps log finite
    const double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // ±1 with equal probability.
  double rademacher() { return (next_u64() & 1ull) ? 1.0 : -1.0; }

  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~0ull - ~0ull % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

 private:
  std::uint64_t state_;
};

}  // namespace gmd
