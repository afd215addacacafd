#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace abc {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Maps a 128-bit counter and a 64-bit key to 128
/// pseudo-random bits.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// A counter-based random stream. Satisfies UniformRandomBitGenerator so it
/// can drive <random> distributions, and adds the handful of draws the
/// simulators need directly.
///
/// The stream is identified by a 64-bit key and a 64-bit stream index; the
/// remaining 64 counter bits enumerate blocks. Two streams with distinct
/// (key, index) never share a block.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t key, std::uint64_t index);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Marsaglia polar method).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double exponential(double rate);
  /// Gamma(shape, 1) (Marsaglia-Tsang; shape < 1 via the power boost).
  double gamma(double shape);
  /// Poisson(mean): multiplication method below mean 10, PTRS above.
  std::int64_t poisson(double mean);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t index() const { return index_; }

 private:
  void refill();

  std::uint64_t key_;
  std::uint64_t index_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// 64-bit FNV-1a; used to turn stage labels into key material.
std::uint64_t fnv1a64(std::string_view text);

/// SplitMix64 finaliser.
std::uint64_t mix64(std::uint64_t x);

/// Derives the stream for (master seed, stage label, index). Streams with
/// distinct labels or indices are distinct; the derivation is fixed.
RngStream seed_stream(std::uint64_t master_seed, std::string_view label, std::uint64_t index);

/// Derives a child master seed, for handing a whole sub-experiment its own
/// seed space.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label, std::uint64_t index);

}  // namespace abc
