#pragma once

#include <cstdint>
#include <limits>

namespace hdm {

/// SplitMix64 finalizer; a bijective 64-bit mixing function.
std::uint64_t mix64(std::uint64_t z);

/// Sub-seed for an indexed sub-stream (fibre, restart, ...). Pure function of
/// its arguments, so results never depend on thread scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Counter-based 64-bit generator: the n-th output is mix64(key + n * golden).
/// Satisfies UniformRandomBitGenerator. Distribution transforms are done here
/// rather than through <random> so streams are identical across standard libraries.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed) : key_(mix64(seed ^ 0x6a09e667f3bcc909ULL)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hdm
