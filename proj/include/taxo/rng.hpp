#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace taxo {

/// SplitMix64, used only to expand a 64-bit seed into xoshiro state.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();

private:
  std::uint64_t state_;
};

/// xoshiro256** 1.0 (Blackman & Vigna). State is four successive SplitMix64
/// outputs of the seed. This generator is part of the reproducibility
/// contract: expansion hold-out sets and Gibbs chains are defined in terms of
/// its output stream, see docs in README.
class Xoshiro256 {
public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() { return next(); }
  std::uint64_t next();

  /// Uniform integer in [0, bound) by Lemire's multiply-shift with rejection.
  /// bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
  std::uint64_t s_[4];
};

/// First `count` elements of a partial Fisher-Yates shuffle of [0, n):
/// for i = 0..count-1, j = i + below(n - i), swap(i, j).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count,
                                                    Xoshiro256& rng);

}  // namespace taxo
