#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace salyap {

/// SplitMix64 output function.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Per-path seed derived from a master seed and a path index.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x5851f42d4c957f2dULL));
}

/**
 * Counter-based random stream keyed by (seed, step, substream).
 *
 * The k-th output is a hash of (key, k), so the stream for step t does not
 * depend on how many values earlier steps consumed. Satisfies
 * UniformRandomBitGenerator.
 */
class CounterStream {
 public:
  using result_type = std::uint64_t;

  CounterStream(std::uint64_t seed, std::uint64_t step, std::uint64_t substream = 0)
      : key_(splitmix64(splitmix64(seed) ^ splitmix64(step ^ 0xd1b54a32d192ed03ULL) ^
                        splitmix64(substream + 0x8cb92ba72f3d8dd7ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * counter_++); }

  double normal() { return normal_(*this); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_;
};

}  // namespace salyap
