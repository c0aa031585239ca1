#include <gtest/gtest.h>

#include <random>

#include "fairreg/fairness_metrics.hpp"
#include "test_support.hpp"

using namespace fairreg;

namespace {

struct Triple {
  std::vector<double> yhat, y;
  Mask mask;
};

Triple random_triple(std::mt19937_64& gen, std::size_t n, double scale = 100.0) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::bernoulli_distribution member(0.35);
  Triple t;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = scale * (2.0 + nd(gen));
    t.y.push_back(y);
    t.yhat.push_back(y + scale * 0.5 * nd(gen));
    t.mask.push_back(member(gen) ? 1 : 0);
  }
  t.mask[0] = 1;
  t.mask[1] = 0;
  return t;
}

/// Pairwise form: cov = 1/(2N^2) sum_ij (a_i - a_j)(r_i - r_j).
double brute_force_covariance(const Triple& t) {
  const std::size_t n = t.y.size();
  long double acc = 0.0L;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const long double da = static_cast<long double>(t.mask[i]) - t.mask[j];
      const long double dr = (static_cast<long double>(t.y[i]) - t.yhat[i]) - (static_cast<long double>(t.y[j]) - t.yhat[j]);
      acc += da * dr;
    }
  return static_cast<double>(acc / (2.0L * n * n));
}

double brute_force_grd(const Triple& t) {
  long double acc = 0.0L;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < t.y.size(); ++i) {
    if (!t.mask[i]) continue;
    for (std::size_t j = 0; j < t.y.size(); ++j) {
      if (t.mask[j]) continue;
      const long double d = std::abs(t.y[i] - t.y[j]);
      acc += d * ((static_cast<long double>(t.y[i]) - t.yhat[i]) - (static_cast<long double>(t.y[j]) - t.yhat[j]));
      ++pairs;
    }
  }
  const long double mean = acc / pairs;
  return static_cast<double>(mean * mean);
}

Mask flip(const Mask& m) {
  Mask out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 0 : 1;
  return out;
}

}  // namespace

TEST(Metrics, PerfectPredictions) {
  const std::vector<double> y{1, 2, 3, 4};
  const Mask m{1, 0, 1, 0};
  const MetricsReport r = metrics_report(y, y, m, 1.0);
  EXPECT_EQ(*r.r2, 1.0);
  EXPECT_EQ(*r.net_comp_g, 0.0);
  EXPECT_EQ(*r.net_comp_c, 0.0);
  EXPECT_EQ(*r.pred_ratio_g, 1.0);
  EXPECT_EQ(*r.pred_ratio_c, 1.0);
  EXPECT_EQ(*r.mean_resid_diff, 0.0);
  EXPECT_EQ(*r.fair_cov, 0.0);
  EXPECT_EQ(r.n_g, 2);
}

TEST(Metrics, HandValues) {
  const std::vector<double> y{0, 0, 3};
  const std::vector<double> constant{3, 3, 3};
  // SSE 18 against SST 6
  EXPECT_DOUBLE_EQ(*r_squared(constant, y), -2.0);
  const std::vector<double> yhat{1, 1, 1};
  const Mask g{0, 0, 1};
  EXPECT_DOUBLE_EQ(net_compensation(yhat, y, g), -2.0);
  EXPECT_DOUBLE_EQ(*predictive_ratio(yhat, y, g), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(mean_residual_difference(yhat, y, g), -3.0);
  // a - abar = (-1/3,-1/3,2/3), r = y - yhat = (-1,-1,2), r mean 0
  EXPECT_NEAR(*fair_covariance(yhat, y, g), (1.0 / 3 + 1.0 / 3 + 4.0 / 3) / 3.0, 1e-15);
}

TEST(Metrics, RSquaredConstantInteriorValue) {
  const std::vector<double> y{1, 2, 3, 4};
  const std::vector<double> c(4, 2.5);
  EXPECT_DOUBLE_EQ(*r_squared(c, y), 0.0);
  const std::vector<double> three(4, 3.0);
  EXPECT_FALSE(r_squared(three, three).defined());
}

TEST(Metrics, UndefinedMarkers) {
  const std::vector<double> y{0, 0, 1};
  const std::vector<double> yhat{1, 1, 1};
  const Measure pr = predictive_ratio(yhat, y, Mask{1, 1, 0});
  EXPECT_FALSE(pr.defined());
  EXPECT_FALSE(pr.reason.empty());
  const MetricsReport r = metrics_report(yhat, y, Mask{1, 1, 1});
  EXPECT_FALSE(r.net_comp_c.defined());
  EXPECT_FALSE(r.mean_resid_diff.defined());
  EXPECT_FALSE(r.fair_cov_scaled.defined());
  const auto cells = metrics_csv_cells(r);
  EXPECT_EQ(cells[4], "NA");
  nlohmann::ordered_json j = r;
  EXPECT_TRUE(j["NC_c"].is_null());
  EXPECT_TRUE(j["notes"].contains("NC_c"));
  EXPECT_THROW(net_compensation(yhat, y, Mask{0, 0, 0}), Error);
  EXPECT_THROW(net_compensation(yhat, y, Mask{0, 0}), Error);
}

TEST(Metrics, ScaledCovarianceClamps) {
  const std::vector<double> y{0, 0, 3};
  const std::vector<double> yhat{1, 1, 1};
  const Mask g{0, 0, 1};
  const double cov = *fair_covariance(yhat, y, g);
  EXPECT_NEAR(*fair_covariance(yhat, y, g, true, 2.0 * cov), 0.5, 1e-15);
  const Measure big = fair_covariance(yhat, y, g, true, 0.5 * cov);
  EXPECT_EQ(*big, 1.0);
  EXPECT_NE(big.reason.find("clamped"), std::string::npos);
  EXPECT_EQ(*fair_covariance(yhat, y, g, true, -cov), 0.0);
}

TEST(Metrics, ColumnsFixed) {
  EXPECT_EQ(metrics_columns(), (std::vector<std::string>{"R2", "PR_g", "PR_c", "NC_g", "NC_c", "MRD", "FairCov",
                                                         "FairCovScaled", "n_g", "n_c"}));
  nlohmann::ordered_json j = metrics_report(std::vector<double>{1, 2}, std::vector<double>{1, 3}, Mask{1, 0});
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(std::vector<std::string>(keys.begin(), keys.begin() + 7),
            (std::vector<std::string>{"R2", "PR_g", "PR_c", "NC_g", "NC_c", "MRD", "FairCov"}));
}

TEST(MetricIdentities, MrdAndSymmetry) {
  std::mt19937_64 gen(21);
  for (int rep = 0; rep < 50; ++rep) {
    const Triple t = random_triple(gen, 60);
    const MetricsReport r = metrics_report(t.yhat, t.y, t.mask);
    EXPECT_EQ(*r.mean_resid_diff, *r.net_comp_g - *r.net_comp_c);
    const MetricsReport s = metrics_report(t.yhat, t.y, flip(t.mask));
    EXPECT_EQ(*s.net_comp_g, *r.net_comp_c);
    EXPECT_EQ(*s.net_comp_c, *r.net_comp_g);
    EXPECT_EQ(mean_residual_difference(t.yhat, t.y, t.mask), -mean_residual_difference(t.yhat, t.y, flip(t.mask)));
  }
}

TEST(MetricIdentities, CovarianceMatchesBruteForce) {
  std::mt19937_64 gen(22);
  for (int rep = 0; rep < 50; ++rep) {
    const Triple t = random_triple(gen, 80, 1.0);
    EXPECT_NEAR(*fair_covariance(t.yhat, t.y, t.mask), brute_force_covariance(t), 1e-12);
  }
}

TEST(MetricIdentities, GroupResidualDifferenceMatchesDoubleLoop) {
  std::mt19937_64 gen(23);
  for (int rep = 0; rep < 50; ++rep) {
    const Triple t = random_triple(gen, 50, 1.0);
    const double grd = group_residual_difference(t.yhat, t.y, t.mask);
    EXPECT_NEAR(grd, brute_force_grd(t), 1e-10);
    EXPECT_GE(grd, 0.0);
  }
}

TEST(GroupResidualDifference, PairCapAndSampling) {
  std::mt19937_64 gen(24);
  const Triple t = random_triple(gen, 400, 1.0);
  PairOptions capped;
  capped.max_pairs = 100;
  try {
    group_residual_difference(t.yhat, t.y, t.mask, absolute_distance, capped);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::pair_cap);
  }
  capped.sample_pairs = 200000;
  capped.seed = 3;
  const double sampled = group_residual_difference(t.yhat, t.y, t.mask, absolute_distance, capped);
  const double exact = group_residual_difference(t.yhat, t.y, t.mask);
  EXPECT_NEAR(std::sqrt(sampled), std::sqrt(exact), 0.05 * std::sqrt(exact) + 0.01);
  EXPECT_EQ(sampled, group_residual_difference(t.yhat, t.y, t.mask, absolute_distance, capped));
}

TEST(GroupResidualDifference, CustomDistance) {
  const std::vector<double> y{1, 2, 4};
  const std::vector<double> yhat{1, 1, 1};
  const Mask g{1, 0, 0};
  // residuals 0, 1, 3; unit distance -> mean of (0-1), (0-3) = -2
  EXPECT_DOUBLE_EQ(group_residual_difference(yhat, y, g, [](double, double) { return 1.0; }), 4.0);
}

TEST(MetricProperties, CovarianceShiftInvariant) {
  std::mt19937_64 gen(25);
  for (int rep = 0; rep < 30; ++rep) {
    Triple t = random_triple(gen, 70, 1.0);
    const double base = *fair_covariance(t.yhat, t.y, t.mask);
    for (std::size_t i = 0; i < t.y.size(); ++i) {
      t.y[i] += 17.5;
      t.yhat[i] += 17.5;
    }
    EXPECT_NEAR(*fair_covariance(t.yhat, t.y, t.mask), base, 1e-12);
  }
}

TEST(MetricProperties, RSquaredAffineInvariant) {
  std::mt19937_64 gen(26);
  for (double a : {-3.0, 0.5, 7.0}) {
    Triple t = random_triple(gen, 70, 1.0);
    const double base = *r_squared(t.yhat, t.y);
    for (std::size_t i = 0; i < t.y.size(); ++i) {
      t.y[i] = a * t.y[i] + 4.0;
      t.yhat[i] = a * t.yhat[i] + 4.0;
    }
    EXPECT_NEAR(*r_squared(t.yhat, t.y), base, 1e-12);
  }
}

TEST(MetricProperties, PredictiveRatioSignMatchesNetCompensation) {
  std::mt19937_64 gen(27);
  for (int rep = 0; rep < 200; ++rep) {
    const Triple t = random_triple(gen, 30, 1.0);
    const double nc = net_compensation(t.yhat, t.y, t.mask);
    const Measure pr = predictive_ratio(t.yhat, t.y, t.mask);
    double sum_y = 0.0;
    for (std::size_t i = 0; i < t.y.size(); ++i) sum_y += t.mask[i] ? t.y[i] : 0.0;
    if (sum_y > 0.0) EXPECT_EQ(*pr < 1.0, nc < 0.0);
  }
}
