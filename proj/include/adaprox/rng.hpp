#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>

namespace adaprox {

/// Counter-based random stream keyed by (seed, iteration, stage).
///
/// Output i is a SplitMix64 finalization of key + i * golden, so a stream is
/// fully determined by its key and position; two streams with different keys
/// never share state.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t iteration = 0, std::uint64_t stage = 0)
      : key_(mix(mix(seed ^ 0x6a09e667f3bcc909ULL) ^ mix(iteration + 0x3c6ef372fe94f82bULL) ^
                 (stage * 0x9e3779b97f4a7c15ULL + 0xbb67ae8584caa73bULL))) {}

  std::uint64_t next() noexcept { return mix(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL); }

  /// Uniform integer in [0, n), unbiased (Lemire's multiply-shift with rejection).
  std::size_t uniform_index(std::size_t n) noexcept {
    const std::uint64_t range = n;
    std::uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * range;
    auto low = static_cast<std::uint64_t>(m);
    if (low < range) {
      const std::uint64_t threshold = (0 - range) % range;
      while (low < threshold) {
        x = next();
        m = static_cast<__uint128_t>(x) * range;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::size_t>(m >> 64);
  }

  /// Uniform double in [0, 1).
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (one draw per call; the pair's twin is discarded).
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  std::uint64_t position() const noexcept { return counter_; }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace adaprox
