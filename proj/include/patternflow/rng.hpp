#pragma once

#include <cstdint>
#include <random>

namespace patternflow {

/// Seeded generator with a pinned output mapping, so simulation reports are
/// bit-for-bit reproducible across platforms for a given seed.
class DeterministicRng {
 public:
  explicit DeterministicRng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0,1), 53 bits of mantissa.
  double next_double() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Uniform in [0,n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n) { return eng_() % n; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace patternflow
