#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairreg/data_model.hpp"
#include "fairreg/random.hpp"

namespace fairreg {

/// Simulation population: nine covariates, two protected classes, two outcomes.
///
/// Each column draws from its own named stream ("X1".."X9", "A1", "A2"), one
/// uniform per row, so any column can be regenerated on its own.
struct SimPopulation {
  Index size = 0;
  std::uint64_t seed = 0;
  std::array<std::vector<double>, 9> x;  // x[0] is X1
  Mask a1, a2;
  std::vector<double> y1, y2;
};

inline constexpr Index kDefaultPopulationSize = 100'000;

SimPopulation generate_population(Index size = kDefaultPopulationSize, std::uint64_t seed = 1);

/// Outcome formulas with the covariate row spelled out; exposed for tests.
double population_y1(const std::array<double, 9>& x, bool a1, bool a2);
double population_y2(const std::array<double, 9>& x, bool a1, bool a2);

/// X1..X9, A1, A2, Y1, Y2 with a leading 1-based id column.
std::string population_csv(const SimPopulation& pop);

struct ScenarioSpec {
  int id = 1;
  int outcome = 1;              // 1 -> Y1, 2 -> Y2
  std::vector<int> regressors;  // 1-based covariate indices

  /// Throws config for ids outside {1,2,3}.
  static ScenarioSpec get(int id);
};

/// Design for one scenario: optional intercept, X<k> columns, groups A1 and
/// A2. `rows` restricts (and orders) the observations.
Dataset scenario_design(const SimPopulation& pop, const ScenarioSpec& spec, bool add_intercept = true,
                        std::optional<std::span<const Index>> rows = std::nullopt);

/// Inverse-CDF draw from Normal(mean, sd) restricted to [lo, hi] using the
/// uniform `u` in (0,1). Bounds may be infinite. Throws numeric when the
/// interval holds less than 1e-300 probability.
double truncated_normal(double mean, double sd, double lo, double hi, double u);
inline double truncated_normal(double mean, double sd, double lo, double hi, RngStream& rng) {
  return truncated_normal(mean, sd, lo, hi, rng.uniform());
}

// ---- two-part analysis data -------------------------------------------------

inline constexpr int kCcsCount = 15;

/// HCC codes used as binary features (62 codes).
const std::vector<int>& analysis_hcc_codes();
/// HCCs that enter the CCS logits.
const std::vector<int>& ccs_driver_hccs();

/// Coefficient table for the two-part generator. Linear predictors are
/// keyed by term name: "intercept", "female", "age", "HCC<code>", "CCS<k>".
struct AnalysisCoefficients {
  double female_p = 0.52;
  double age_mean = 44.0, age_sd = 12.0, age_lo = 21.0, age_hi = 63.0;
  double noise_sd = 6000.0;
  /// Per HCC code: intercept, female, age.
  std::map<int, std::map<std::string, double>> hcc;
  /// Per CCS index 1..15: intercept, female, age, HCC<driver>.
  std::map<int, std::map<std::string, double>> ccs;
  std::map<std::string, double> omega;  // any-spending logit
  std::map<std::string, double> phi;    // log spending

  /// Plain "name value" table with a ``version 1`` line. Unknown, missing
  /// or duplicated names throw config naming the key.
  static AnalysisCoefficients parse(std::string_view text);
  static AnalysisCoefficients load(const std::filesystem::path& path);
  /// The table shipped in data/analysis_coefficients_default.txt.
  static AnalysisCoefficients defaults();
  std::string to_text() const;
};

struct AnalysisSynthConfig {
  Index n = 100'000;
  std::uint64_t seed = 1;
  AnalysisCoefficients coef = AnalysisCoefficients::defaults();
  bool add_intercept = true;

  /// Throws config on n < 1, non-positive sd, or an empty age interval.
  void validate() const;
};

struct AnalysisSummary {
  Index n = 0;
  double zero_spend_share = 0.0;     // share with no spending (S = 0)
  double observed_zero_share = 0.0;  // share with Y exactly 0 after noise
  double group_prevalence = 0.0;
  double mean_y = 0.0, median_y = 0.0, max_y = 0.0, min_y = 0.0;
  double mean_y_group = 0.0, mean_y_complement = 0.0;
};

struct AnalysisData {
  /// Features: intercept (by flag), female, age, HCC<code>...; group "mhsud".
  Dataset dataset;
  Mask any_spending;
  std::vector<double> latent;  // 0 when no spending, else exp(phi'x)
  AnalysisSummary summary;
};

inline constexpr std::string_view kAnalysisGroup = "mhsud";

AnalysisData generate_analysis_data(const AnalysisSynthConfig& cfg);

AnalysisSummary summarize_analysis(const Dataset& ds, MaskView any_spending);

}  // namespace fairreg
