#include "fairreg/random.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>

namespace fairreg {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(prod >> 32);
  lo = static_cast<std::uint32_t>(prod);
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t k = splitmix64(seed ^ splitmix64(stream));
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

CounterRng::CounterRng(std::uint64_t seed, std::string_view stream_name)
    : CounterRng(seed, fnv1a64(stream_name)) {}

std::uint64_t CounterRng::bits(std::uint64_t index, std::uint32_t draw) const {
  const auto out = philox4x32(
      {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), draw, 0u}, key_);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double CounterRng::uniform(std::uint64_t index, std::uint32_t draw) const {
  return (static_cast<double>(bits(index, draw) >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t RngStream::below(std::uint64_t n) {
  // Rejection on the top partial block keeps the result unbiased.
  const std::uint64_t limit = n == 0 ? 0 : (~std::uint64_t{0} - (~std::uint64_t{0} % n));
  for (;;) {
    const std::uint64_t b = bits();
    if (b < limit) return b % n;
  }
}

double normal_from_uniform(double u, double mean, double sd) {
  return boost::math::quantile(boost::math::normal_distribution<double>(mean, sd), u);
}

int poisson_from_uniform(double u, double rate) {
  double p = std::exp(-rate);
  double cdf = p;
  int k = 0;
  while (u > cdf) {
    ++k;
    p *= rate / k;
    const double next = cdf + p;
    if (next == cdf) break;  // far tail, remaining mass below resolution
    cdf = next;
  }
  return k;
}

}  // namespace fairreg
