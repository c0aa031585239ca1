#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fairreg/synthgen.hpp"

using namespace fairreg;

namespace {

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }
double share(const Mask& m) { return std::accumulate(m.begin(), m.end(), 0.0) / m.size(); }

const SimPopulation& population() {
  static const SimPopulation pop = generate_population();
  return pop;
}

double truncated_mean(double mu, double sd, double lo, double hi) {
  const boost::math::normal_distribution<double> z(0.0, 1.0);
  const double a = (lo - mu) / sd, b = (hi - mu) / sd;
  return mu + sd * (boost::math::pdf(z, a) - boost::math::pdf(z, b)) / (boost::math::cdf(z, b) - boost::math::cdf(z, a));
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::io;
}

}  // namespace

TEST(Population, MomentsAtDefaultSize) {
  const SimPopulation& pop = population();
  ASSERT_EQ(pop.size, kDefaultPopulationSize);
  EXPECT_NEAR(mean_of(pop.x[0]), 70.0, 0.2);
  EXPECT_NEAR(mean_of(pop.x[1]), 10.0, 0.1);
  EXPECT_NEAR(mean_of(pop.x[2]), 35.0, 0.1);
  const double nominal[6] = {0.5, 0.1, 0.05, 0.8, 0.03, 0.2};
  for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(mean_of(pop.x[3 + k]), nominal[k], 0.01) << "X" << k + 4;
}

TEST(Population, ProtectedClassRates) {
  const SimPopulation& pop = population();
  // P(A1) = 0.5 * 0.2 / 2 + 0.01 = 0.06, P(A2) = 0.5 / 3 + 0.05
  EXPECT_NEAR(share(pop.a1), 0.06, 0.01);
  EXPECT_NEAR(share(pop.a2), 0.5 / 3.0 + 0.05, 0.01);
  std::size_t both = 0, a1_x4_zero = 0, x4_zero = 0;
  for (std::size_t i = 0; i < pop.a1.size(); ++i) {
    both += pop.a1[i] && pop.a2[i];
    if (pop.x[3][i] == 0.0) {
      ++x4_zero;
      a1_x4_zero += pop.a1[i];
    }
  }
  EXPECT_NEAR(static_cast<double>(both) / pop.a1.size(), 0.021, 0.005);
  EXPECT_NEAR(static_cast<double>(a1_x4_zero) / x4_zero, 0.01, 0.003);
}

TEST(Population, Domains) {
  const SimPopulation& pop = population();
  for (std::size_t i = 0; i < pop.a1.size(); ++i) {
    for (std::size_t k = 1; k < 3; ++k) {
      ASSERT_GE(pop.x[k][i], 0.0);
      ASSERT_EQ(pop.x[k][i], std::floor(pop.x[k][i]));
    }
    for (std::size_t k = 3; k < 9; ++k) ASSERT_TRUE(pop.x[k][i] == 0.0 || pop.x[k][i] == 1.0);
    ASSERT_TRUE(std::isfinite(pop.y1[i]) && std::isfinite(pop.y2[i]));
  }
}

TEST(Population, OutcomeFormulas) {
  const std::array<double, 9> x{2, 3, 5, 1, 1, 1, 1, 1, 1};
  // 2*3*1 + 3*1 + 5*1*1 + 2^1 + 2*1 + 5*1 = 23 with both classes
  EXPECT_DOUBLE_EQ(population_y1(x, true, true), 23.0);
  EXPECT_DOUBLE_EQ(population_y1(x, false, false), 13.0);
  // 2 + 3 + 5 + 5 + 2 = 17
  EXPECT_DOUBLE_EQ(population_y2(x, true, true), 17.0);
  EXPECT_DOUBLE_EQ(population_y2(x, false, true), 10.0);
}

TEST(Population, DeterministicAndColumnIndependent) {
  const SimPopulation a = generate_population(2000, 4);
  const SimPopulation b = generate_population(2000, 4);
  EXPECT_EQ(population_csv(a), population_csv(b));
  // A prefix of a larger population is the smaller population.
  const SimPopulation big = generate_population(3000, 4);
  EXPECT_TRUE(std::equal(a.y1.begin(), a.y1.end(), big.y1.begin()));
  EXPECT_NE(population_csv(a), population_csv(generate_population(2000, 5)));
  EXPECT_EQ(kind_of([] { generate_population(0, 1); }), ErrorKind::config);
}

TEST(Population, CsvLayout) {
  const std::string csv = population_csv(generate_population(3, 1));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "id,X1,X2,X3,X4,X5,X6,X7,X8,X9,A1,A2,Y1,Y2");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Scenarios, RegressorSets) {
  EXPECT_EQ(ScenarioSpec::get(1).regressors, (std::vector<int>{1, 2, 3, 5, 6, 7, 8, 9}));
  EXPECT_EQ(ScenarioSpec::get(2).outcome, 2);
  const auto s3 = ScenarioSpec::get(3).regressors;
  for (int omitted : {2, 3, 5}) EXPECT_EQ(std::count(s3.begin(), s3.end(), omitted), 0);
  EXPECT_EQ(kind_of([] { ScenarioSpec::get(4); }), ErrorKind::config);
}

TEST(Scenarios, DesignMatchesPopulation) {
  const SimPopulation pop = generate_population(500, 2);
  const std::vector<Index> rows{10, 3, 499};
  const Dataset ds = scenario_design(pop, ScenarioSpec::get(1), true, std::span<const Index>(rows));
  ASSERT_EQ(ds.n(), 3);
  ASSERT_EQ(ds.p(), 9);
  EXPECT_EQ(ds.feature_names()[0], "intercept");
  EXPECT_EQ(ds.feature_names()[1], "X1");
  EXPECT_EQ(ds.x()(1, 1), pop.x[0][3]);
  EXPECT_EQ(ds.y()[2], pop.y1[499]);
  EXPECT_EQ(ds.group("A1").mask[0], pop.a1[10]);
  EXPECT_EQ(ds.ids()[0], "11");
  const Dataset full = scenario_design(pop, ScenarioSpec::get(2), false);
  EXPECT_EQ(full.n(), 500);
  EXPECT_EQ(full.p(), 9);
  EXPECT_EQ(full.y()[7], pop.y2[7]);
}

TEST(TruncatedNormal, UnboundedIsOrdinaryNormal) {
  const double inf = std::numeric_limits<double>::infinity();
  const boost::math::normal_distribution<double> nd(3.0, 2.0);
  for (double u : {0.01, 0.3, 0.5, 0.9}) {
    EXPECT_NEAR(truncated_normal(3.0, 2.0, -inf, inf, u), boost::math::quantile(nd, u), 1e-10);
  }
}

TEST(TruncatedNormal, EmpiricalMeanMatchesClosedForm) {
  RngStream rng(1, "tn-test");
  const int n = 1'000'000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = truncated_normal(44.0, 12.0, 21.0, 63.0, rng);
    ASSERT_GE(v, 21.0);
    ASSERT_LE(v, 63.0);
    sum += v;
  }
  EXPECT_NEAR(sum / n, truncated_mean(44.0, 12.0, 21.0, 63.0), 0.1);
}

TEST(TruncatedNormal, FarTailsAndErrors) {
  // Interval far above the mean: still inside the bounds.
  const double v = truncated_normal(0.0, 1.0, 30.0, 31.0, 0.5);
  EXPECT_GE(v, 30.0);
  EXPECT_LE(v, 31.0);
  const double w = truncated_normal(0.0, 1.0, -31.0, -30.0, 0.5);
  EXPECT_GE(w, -31.0);
  EXPECT_LE(w, -30.0);
  EXPECT_EQ(kind_of([] { truncated_normal(0.0, 1.0, 60.0, 61.0, 0.5); }), ErrorKind::numeric);
  EXPECT_EQ(kind_of([] { truncated_normal(0.0, 0.0, 0.0, 1.0, 0.5); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { truncated_normal(0.0, 1.0, 1.0, 1.0, 0.5); }), ErrorKind::config);
}

TEST(AnalysisData, DefaultCalibrationAndShape) {
  AnalysisSynthConfig cfg;
  cfg.n = 50'000;
  const AnalysisData data = generate_analysis_data(cfg);
  const AnalysisSummary& s = data.summary;
  EXPECT_NEAR(s.zero_spend_share, 0.105, 0.02);
  EXPECT_NEAR(s.group_prevalence, 0.157, 0.02);
  EXPECT_LT(s.median_y, s.mean_y);
  EXPECT_GT(s.mean_y_group, s.mean_y_complement);
  EXPECT_GE(s.min_y, 0.0);
  const Dataset& ds = data.dataset;
  EXPECT_EQ(ds.p(), 3 + static_cast<Index>(analysis_hcc_codes().size()));
  EXPECT_EQ(ds.feature_names()[1], "female");
  EXPECT_EQ(ds.feature_names()[2], "age");
  EXPECT_TRUE(ds.has_group(kAnalysisGroup));
  for (const auto& name : ds.feature_names()) EXPECT_EQ(name.rfind("CCS", 0), std::string::npos);
  const double max_latent = *std::max_element(data.latent.begin(), data.latent.end());
  EXPECT_LE(ds.y().maxCoeff(), max_latent);
  for (Index i = 0; i < ds.n(); ++i) {
    if (!data.any_spending[static_cast<std::size_t>(i)]) EXPECT_EQ(data.latent[static_cast<std::size_t>(i)], 0.0);
  }
}

TEST(AnalysisData, Deterministic) {
  AnalysisSynthConfig cfg;
  cfg.n = 3000;
  cfg.seed = 8;
  EXPECT_EQ(to_csv(generate_analysis_data(cfg).dataset), to_csv(generate_analysis_data(cfg).dataset));
  AnalysisSynthConfig other = cfg;
  other.seed = 9;
  EXPECT_NE(to_csv(generate_analysis_data(cfg).dataset), to_csv(generate_analysis_data(other).dataset));
  cfg.add_intercept = false;
  EXPECT_EQ(generate_analysis_data(cfg).dataset.feature_names()[0], "female");
}

TEST(AnalysisData, ConfigErrors) {
  AnalysisSynthConfig cfg;
  cfg.n = 0;
  EXPECT_EQ(kind_of([&] { generate_analysis_data(cfg); }), ErrorKind::config);
  cfg.n = 100;
  cfg.coef.noise_sd = 0.0;
  EXPECT_EQ(kind_of([&] { generate_analysis_data(cfg); }), ErrorKind::config);
  cfg.coef = AnalysisCoefficients::defaults();
  cfg.coef.omega["intercept"] = -1e6;
  EXPECT_EQ(kind_of([&] { generate_analysis_data(cfg); }), ErrorKind::config);
}

TEST(Coefficients, TextRoundTrip) {
  const AnalysisCoefficients d = AnalysisCoefficients::defaults();
  EXPECT_EQ(d.hcc.size(), analysis_hcc_codes().size());
  EXPECT_EQ(d.ccs.size(), static_cast<std::size_t>(kCcsCount));
  const AnalysisCoefficients back = AnalysisCoefficients::parse(d.to_text());
  EXPECT_EQ(back.to_text(), d.to_text());
  EXPECT_EQ(back.omega, d.omega);
  EXPECT_EQ(back.hcc, d.hcc);
}

TEST(Coefficients, ParseErrorsNameTheKey) {
  const std::string text = AnalysisCoefficients::defaults().to_text();
  auto expect_config = [](const std::string& t, const std::string& needle) {
    try {
      AnalysisCoefficients::parse(t);
      ADD_FAILURE() << "expected config error for " << needle;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::config);
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_config(text + "bogus.key 1\n", "bogus.key");
  expect_config(text + "noise_sd 5\n", "noise_sd");
  const auto pos = text.find("female_p");
  std::string missing = text;
  missing.erase(pos, text.find('\n', pos) - pos + 1);
  expect_config(missing, "female_p");
  std::string version = text;
  version.replace(version.find("version 1"), 9, "version 2");
  expect_config(version, "version");
  expect_config(text + "age_sd abc\n", "age_sd");
}
