#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace mqsa {

// SplitMix64 generator with an explicit 64-bit seed. Every stochastic
// operation in the library takes one of these by reference; there is no
// global RNG state. Component streams are derived from the run seed by
// fixed offsets (see rng_streams below).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller with a cached spare.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u = 1.0 - next_double();  // (0, 1], keeps log finite
    const double r = std::sqrt(-2.0 * std::log(u));
    const double theta = 6.283185307179586 * next_double();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Normal(0, stddev) re-sampled until |z| <= cutoff standard deviations.
  double next_truncated_normal(double stddev, double cutoff = 2.0) {
    double z = next_normal();
    while (std::abs(z) > cutoff) z = next_normal();
    return z * stddev;
  }

  // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t next_below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Fixed seed offsets for the per-component streams of a run.
namespace rng_streams {
inline constexpr std::uint64_t kInit = 0;      // parameter initialization
inline constexpr std::uint64_t kShuffle = 1;   // per-epoch user shuffling
inline constexpr std::uint64_t kDropout = 2;   // forward + distillation dropout
inline constexpr std::uint64_t kSynthetic = 4; // synthetic corpus generation
}  // namespace rng_streams

inline SplitMix64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  return SplitMix64(seed + stream);
}

}  // namespace mqsa
