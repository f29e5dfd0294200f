#pragma once

#include <cstdint>

namespace twogrid {

// Counter-based SplitMix64: draw k of stream `seed` is mix(seed + (k+1) * golden).
// Output depends only on (seed, k), so sequences are identical on every
// platform and can be addressed randomly.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0)
      : seed_(seed), counter_(counter) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t at(std::uint64_t seed, std::uint64_t k) {
    return mix(seed + (k + 1) * 0x9E3779B97F4A7C15ULL);
  }

  std::uint64_t next_u64() { return at(seed_, counter_++); }

  // Uniform on the open interval (0, 1).
  static double to_open01(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform() { return to_open01(next_u64()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t counter() const noexcept { return counter_; }

private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

} // namespace twogrid
