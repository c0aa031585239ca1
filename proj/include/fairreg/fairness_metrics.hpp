#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairreg/data_model.hpp"

namespace fairreg {

/// A metric value, or an explicit undefined marker with a reason. Never NaN.
struct Measure {
  std::optional<double> value;
  /// Why the value is undefined, or a note (e.g. clamping) when defined.
  std::string reason;

  static Measure of(double v) { return {v, {}}; }
  static Measure undefined(std::string why) { return {std::nullopt, std::move(why)}; }
  bool defined() const noexcept { return value.has_value(); }
  double operator*() const { return value.value(); }
};

// Residual orientation: metrics use yhat - y (negative = undercompensation).

/// Mean of yhat - y over the group. Throws degenerate_group when empty.
double net_compensation(Values yhat, Values y, MaskView mask);

/// Group net compensation minus complement net compensation.
double mean_residual_difference(Values yhat, Values y, MaskView mask);

/// sum_g yhat / sum_g y; undefined when the outcome sum is zero.
Measure predictive_ratio(Values yhat, Values y, MaskView mask);

/// Population covariance (divisor N) between membership and y - yhat;
/// positive = the group is systematically underpredicted. When scaled, the
/// result is divided by cstar and clamped to [0,1] (noted in `reason`).
Measure fair_covariance(Values yhat, Values y, MaskView mask, bool scale_by_cstar = false,
                        std::optional<double> cstar = std::nullopt);

/// 1 - SSE/SST with the evaluation set's own mean; undefined for constant y.
Measure r_squared(Values yhat, Values y);

using OutcomeDistance = std::function<double(double, double)>;
inline double absolute_distance(double a, double b) { return a > b ? a - b : b - a; }

struct PairOptions {
  std::uint64_t max_pairs = 100'000'000;
  /// When set and the cap is exceeded, average over this many uniformly
  /// sampled (group, complement) pairs instead of refusing.
  std::optional<std::uint64_t> sample_pairs;
  std::uint64_t seed = 0;
};

/// [1/(n_g n_c) sum_{i in g, j in g^c} d(y_i, y_j) ((y_i - yhat_i) - (y_j - yhat_j))]^2.
/// Throws pair_cap when n_g * n_c exceeds the cap and sampling is off.
double group_residual_difference(Values yhat, Values y, MaskView mask,
                                 const OutcomeDistance& distance = absolute_distance,
                                 const PairOptions& options = {});

struct MetricsReport {
  Measure r2;
  Measure net_comp_g, net_comp_c;
  Measure pred_ratio_g, pred_ratio_c;
  Measure mean_resid_diff;
  Measure fair_cov;
  Measure fair_cov_scaled;
  Index n_g = 0, n_c = 0;
};

/// Every measure for one (predictions, outcomes, group) triple. Failures
/// become undefined fields; mean_resid_diff is computed as NC_g - NC_c.
MetricsReport metrics_report(Values yhat, Values y, MaskView mask, std::optional<double> cstar = std::nullopt);

/// Fixed column order: R2, PR_g, PR_c, NC_g, NC_c, MRD, FairCov, then
/// FairCovScaled, n_g, n_c.
const std::vector<std::string>& metrics_columns();
std::vector<std::string> metrics_csv_cells(const MetricsReport& r);
void to_json(nlohmann::ordered_json& j, const Measure& m);
void to_json(nlohmann::ordered_json& j, const MetricsReport& r);

}  // namespace fairreg
