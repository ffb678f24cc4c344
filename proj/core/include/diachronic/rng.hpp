#pragma once

#include <cstdint>
#include <limits>

namespace diachronic {

/// Counter-based 64-bit generator.
///
/// The i-th output of stream s under seed k is a pure function
/// H(k, s, i) built from two rounds of the SplitMix64 finalizer, so any
/// replication can be reproduced without replaying the others: the harness
/// gives replication r the stream index r. Distribution helpers are
/// implemented here rather than through <random> so that reports are
/// byte-identical across standard libraries.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_lo_(mix(seed ^ 0x6A09E667F3BCC909ULL)),
        key_hi_(mix(stream + 0xBB67AE8584CAA73BULL) ^ mix(seed + 0x3C6EF372FE94F82BULL)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return at(counter_++); }

  /// Output at an arbitrary counter position; does not advance the stream.
  [[nodiscard]] result_type at(std::uint64_t counter) const noexcept {
    return mix(mix(counter ^ key_lo_) + key_hi_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n must be positive. Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) noexcept {
    for (;;) {
      const u128 m = static_cast<u128>((*this)()) * n;
      const auto low = static_cast<std::uint64_t>(m);
      if (low >= n || low >= (0 - n) % n) return static_cast<std::uint64_t>(m >> 64);
    }
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Independent child stream, deterministic in (this key, substream).
  [[nodiscard]] CounterRng split(std::uint64_t substream) const noexcept {
    return CounterRng(key_lo_ ^ mix(key_hi_ + substream), substream);
  }

  [[nodiscard]] std::uint64_t position() const noexcept { return counter_; }

 private:
  __extension__ using u128 = unsigned __int128;

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_lo_;
  std::uint64_t key_hi_;
  std::uint64_t counter_ = 0;
};

}  // namespace diachronic
