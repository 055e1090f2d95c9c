#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace fairsample {

/// SplitMix64 (Steele, Lea & Flood 2014). The whole generator is the state
/// transition below, so every implementation that follows it reproduces the
/// same stream bit for bit:
///
///   state  <- state + 0x9E3779B97F4A7C15            (mod 2^64)
///   z      <- state
///   z      <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9  (mod 2^64)
///   z      <- (z ^ (z >> 27)) * 0x94D049BB133111EB  (mod 2^64)
///   output <- z ^ (z >> 31)
///
/// Derived draws:
///   uniform01()       = (next() >> 11) * 2^-53, a double in [0, 1)
///   below(n)          = rejection sampling: draw x = next() until
///                       x >= (2^64 mod n), return x mod n
///   shuffle(v)        = for i = |v| down to 2: swap v[i-1] with v[below(i)]
///
/// No std:: distribution is used anywhere because their outputs are
/// implementation-defined.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = -n % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t x = next();
      if (x >= limit) return x % n;
    }
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace fairsample
