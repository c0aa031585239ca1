#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "fairreg/random.hpp"

using namespace fairreg;

TEST(Philox, KnownAnswerZero) {
  const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerAllOnes) {
  const auto out = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Fnv1a, ReferenceValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

TEST(CounterRng, PureFunctionOfIndex) {
  CounterRng a(7, "X1"), b(7, "X1");
  for (std::uint64_t i : {0ull, 1ull, 99ull, 123456789ull}) EXPECT_EQ(a.bits(i), b.bits(i));
  EXPECT_NE(a.bits(3, 0), a.bits(3, 1));
}

TEST(CounterRng, StreamsAndSeedsAreDistinct) {
  CounterRng x1(7, "X1"), x2(7, "X2"), other_seed(8, "X1");
  int same_stream = 0, same_seed = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    same_stream += x1.bits(i) == x2.bits(i);
    same_seed += x1.bits(i) == other_seed.bits(i);
  }
  EXPECT_EQ(same_stream, 0);
  EXPECT_EQ(same_seed, 0);
}

TEST(CounterRng, UniformOpenIntervalAndMoments) {
  CounterRng rng(42, "moments");
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform(static_cast<std::uint64_t>(i));
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.5, 0.005);
  EXPECT_NEAR(sq / n - mean * mean, 1.0 / 12.0, 0.002);
}

TEST(RngStream, BelowIsUniformAndInRange) {
  RngStream s(3, "below");
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = s.below(7);
    ASSERT_LT(v, 7u);
    ++counts[v];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
  EXPECT_EQ(s.below(1), 0u);
}

TEST(Variates, NormalInverseCdf) {
  EXPECT_NEAR(normal_from_uniform(0.5, 3.0, 2.0), 3.0, 1e-12);
  const boost::math::normal_distribution<double> nd(0.0, 1.0);
  EXPECT_NEAR(normal_from_uniform(0.975, 0.0, 1.0), boost::math::quantile(nd, 0.975), 1e-12);
  EXPECT_NEAR(normal_from_uniform(0.975, 0.0, 1.0), 1.959963984540054, 1e-9);
}

TEST(Variates, PoissonMatchesRateMoments) {
  CounterRng rng(11, "poisson");
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const int k = poisson_from_uniform(rng.uniform(static_cast<std::uint64_t>(i)), 10.0);
    ASSERT_GE(k, 0);
    sum += k;
    sq += static_cast<double>(k) * k;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 10.0, 0.05);
  EXPECT_NEAR(sq / n - mean * mean, 10.0, 0.2);
  // P(K = 0) = e^-rate, so u just below that maps to 0 and just above to 1.
  EXPECT_EQ(poisson_from_uniform(std::exp(-2.0) * 0.999, 2.0), 0);
  EXPECT_EQ(poisson_from_uniform(std::exp(-2.0) * 1.001, 2.0), 1);
}

TEST(Variates, Bernoulli) {
  EXPECT_TRUE(bernoulli_from_uniform(0.2, 0.3));
  EXPECT_FALSE(bernoulli_from_uniform(0.3, 0.3));
}
