#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace fairreg {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3"). Fixed algorithm, so streams are bit-identical across
/// platforms and compilers.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// 64-bit FNV-1a; used to name substreams.
std::uint64_t fnv1a64(std::string_view text);

/// Counter-based generator: the i-th variate of a (seed, stream) pair is a
/// pure function of (seed, stream, i, draw). Columns use one stream each, so
/// adding a column never perturbs another.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);
  CounterRng(std::uint64_t seed, std::string_view stream_name);

  std::uint64_t bits(std::uint64_t index, std::uint32_t draw = 0) const;
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform(std::uint64_t index, std::uint32_t draw = 0) const;

 private:
  std::array<std::uint32_t, 2> key_;
};

/// Sequential view over one CounterRng stream.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view stream_name) : rng_(seed, stream_name) {}
  RngStream(std::uint64_t seed, std::uint64_t stream) : rng_(seed, stream) {}

  double uniform() { return rng_.uniform(next_++); }
  std::uint64_t bits() { return rng_.bits(next_++); }
  /// Unbiased integer in [0, n), n >= 1.
  std::uint64_t below(std::uint64_t n);

 private:
  CounterRng rng_;
  std::uint64_t next_ = 0;
};

// Inverse-CDF variates from a single uniform.
double normal_from_uniform(double u, double mean, double sd);
int poisson_from_uniform(double u, double rate);
inline bool bernoulli_from_uniform(double u, double p) { return u < p; }

}  // namespace fairreg
