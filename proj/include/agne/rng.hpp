#pragma once

#include <cstdint>
#include <random>

namespace agne {

/// Seeded 64-bit Mersenne Twister with platform-independent uniform draws.
///
/// std::uniform_*_distribution is implementation-defined, so all sampling
/// goes through the raw 64-bit stream: 53 high bits give a double in [0,1),
/// which is scaled affinely (inverse CDF of the uniform law).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on {0, ..., upper} (inclusive); upper >= 0.
  std::uint64_t uniform_int(std::uint64_t upper) {
    // Multiply-shift on the 53-bit fraction; bias is below 2^-53 * upper.
    const auto k = static_cast<std::uint64_t>(uniform() * static_cast<double>(upper + 1));
    return k > upper ? upper : k;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace agne
