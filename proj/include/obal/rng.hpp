#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace obal {

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based SplitMix64 generator.
///
/// Draw number i (1-based) is `splitmix64_mix(seed + i * 0x9E3779B97F4A7C15)`,
/// which is exactly the SplitMix64 output sequence started from state `seed`.
/// State is two 64-bit integers, so a (seed, counter) pair reproduces the
/// stream on every platform. Independent sub-streams come from `fork(tag)`.
class SeededRng {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit SeededRng(std::uint64_t seed = 0) noexcept : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept { return splitmix64_mix(seed_ + (++counter_) * kGamma); }

  /// Uniform on [0,1), 53-bit resolution.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0,1).
  double uniform_open() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Rademacher sign from the top bit of one draw.
  int sign() noexcept { return (next_u64() >> 63) ? -1 : 1; }

  /// Standard normal via Box-Muller; uses two draws, discards the sine branch.
  double gaussian() noexcept {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Statistically independent generator keyed by `tag`; does not advance this one.
  SeededRng fork(std::uint64_t tag) const noexcept {
    return SeededRng(splitmix64_mix(seed_ ^ splitmix64_mix(tag + kGamma)));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

// Sub-stream tags used across pipelines so that point streams never depend on
// sign choices (paired comparisons rely on this).
namespace stream_tag {
inline constexpr std::uint64_t kInput = 1;
inline constexpr std::uint64_t kSymmetrize = 2;
inline constexpr std::uint64_t kBaseline = 3;
inline constexpr std::uint64_t kCovariance = 4;
inline constexpr std::uint64_t kProbe = 5;
}  // namespace stream_tag

}  // namespace obal
