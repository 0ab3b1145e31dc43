#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dmca {

/// Counter-based generator: the n-th draw is a pure function of (seed, stream, n).
///
/// Each draw hashes `key + n * golden_gamma` through the SplitMix64 finalizer, so
/// two generators built from the same seed and stream produce identical sequences
/// on every platform, and distinct streams are decorrelated.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();
  /// Uniform integer in [0, n); n must be positive.
  std::size_t below(std::size_t n);
  bool bernoulli(double p);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Fisher-Yates permutation of [0, n) driven by `rng`.
std::vector<std::size_t> random_permutation(std::size_t n, CounterRng& rng);

}  // namespace dmca
