#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace kolmo::rng {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Key of an independent stream derived from (seed, stream id).
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed) ^ mix64(stream * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL));
}

/// The counter-th 64-bit word of a stream.
constexpr std::uint64_t word(std::uint64_t key, std::uint64_t counter) noexcept {
  return mix64(key ^ mix64(counter + 0xA0761D6478BD642FULL));
}

/// Uniform in (0, 1].
inline double uniform_open0(std::uint64_t w) noexcept {
  return (static_cast<double>(w >> 11) + 1.0) * 0x1.0p-53;
}

/// Standard normal number `index` of the stream. Box-Muller pairs share one
/// pair of words: even indices take the cosine branch, odd the sine branch.
inline double normal(std::uint64_t key, std::uint64_t index) noexcept {
  const std::uint64_t pair = index >> 1;
  const double u1 = uniform_open0(word(key, 2 * pair));
  const double u2 = uniform_open0(word(key, 2 * pair + 1));
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return (index & 1U) ? r * std::sin(a) : r * std::cos(a);
}

/// Sequential reader producing the same values as `normal(key, i)` for
/// i = start, start+1, ... while evaluating each Box-Muller pair once.
class NormalStream {
 public:
  NormalStream(std::uint64_t key, std::uint64_t start = 0) noexcept : key_(key), next_(start) {}

  double operator()() noexcept {
    const std::uint64_t i = next_++;
    const std::uint64_t pair = i >> 1;
    if (pair != cached_pair_) {
      const double u1 = uniform_open0(word(key_, 2 * pair));
      const double u2 = uniform_open0(word(key_, 2 * pair + 1));
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double a = 2.0 * std::numbers::pi * u2;
      c_ = r * std::cos(a);
      s_ = r * std::sin(a);
      cached_pair_ = pair;
    }
    return (i & 1U) ? s_ : c_;
  }

 private:
  std::uint64_t key_;
  std::uint64_t next_;
  std::uint64_t cached_pair_ = ~std::uint64_t{0};
  double c_ = 0.0;
  double s_ = 0.0;
};

/// Seed of the i-th member of an ensemble rooted at `seed`.
constexpr std::uint64_t member_seed(std::uint64_t seed, std::uint64_t i) noexcept {
  return mix64(seed ^ mix64(i + 0x5851F42D4C957F2DULL));
}

}  // namespace kolmo::rng
