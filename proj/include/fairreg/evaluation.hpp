#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairreg/data_model.hpp"
#include "fairreg/estimators.hpp"
#include "fairreg/fairness_metrics.hpp"
#include "fairreg/synthgen.hpp"

namespace fairreg {

/// Fold labels 0..k-1, one per observation.
struct CvPlan {
  int k = 5;
  std::uint64_t seed = 0;
  std::vector<int> assignment;

  Index n() const noexcept { return static_cast<Index>(assignment.size()); }
  std::vector<Index> held_out(int fold) const;
  std::vector<Index> training(int fold) const;
};

/// Uniform random partition with sizes differing by at most one. With
/// `stratify`, members and non-members are each spread evenly over folds.
/// Throws fold unless 2 <= k <= n.
CvPlan make_folds(Index n, int k, std::uint64_t seed, std::optional<MaskView> stratify = std::nullopt);

struct CvResult {
  Vector pooled_yhat;  // out-of-fold predictions in original row order
  std::vector<FitResult> fold_fits;
  std::vector<std::vector<Index>> fold_rows;
};

/// Fits on each training split and predicts its held-out rows. A failing
/// fold is rethrown as a fold error naming the fold.
CvResult cross_validate(const Dataset& ds, const FitSpec& spec, const CvPlan& cv);

enum class MetricsMode {
  pooled,         // one report over all out-of-fold predictions
  fold_averaged,  // mean of per-fold held-out reports
};

struct ExperimentOptions {
  MetricsMode mode = MetricsMode::pooled;
  /// 0 selects the available hardware parallelism.
  unsigned workers = 0;
  bool sort_by_net_compensation = true;
  /// Keep per-fold held-out reports and θ on each row.
  bool fold_detail = false;
};

struct ExperimentGrid {
  const Dataset* dataset = nullptr;
  std::string group_label;
  std::vector<FitSpec> specs;
  CvPlan cv;

  /// Throws config on an empty grid, a missing dataset, fold plans of the
  /// wrong length, or specs naming another group.
  void validate() const;
};

struct ExperimentRow {
  FitSpec spec;
  std::string label;
  /// Set when the fit failed; metrics are then undefined.
  std::optional<std::string> error;
  std::optional<ErrorKind> error_kind;
  MetricsReport cv_metrics;
  MetricsReport in_sample;
  /// Net compensation of every other dataset group under the out-of-fold
  /// predictions, in dataset order.
  std::vector<std::pair<std::string, Measure>> other_groups;
  std::optional<FitResult> full_fit;
  double mean_kkt_residual = 0.0;
  int folds_constraint_active = 0;
  Vector pooled_yhat;
  std::vector<MetricsReport> fold_metrics;
  std::vector<Vector> fold_theta;
};

struct ExperimentResult {
  std::string group_label;
  std::vector<ExperimentRow> rows;
  /// OLS out-of-fold fair covariance; denominator of FairCovScaled.
  std::optional<double> cstar_cv;
  std::optional<double> cstar_in_sample;

  bool all_succeeded() const;
};

/// Every spec under the same folds. Per-spec failures become error rows.
ExperimentResult run_experiment(const ExperimentGrid& grid, const ExperimentOptions& options = {});

void sort_by_net_compensation(std::vector<ExperimentRow>& rows);

/// 16 specs of the simulation tables for one protected group.
std::vector<FitSpec> simulation_table_grid(const std::string& group);
/// Six specs of the analysis-data table (best hyperparameter per estimator).
std::vector<FitSpec> analysis_table_grid(const std::string& group);

struct ReplicationOptions {
  Index n = 10'000;
  int draws = 50;
  std::uint64_t draw_seed = 2;
  int k = 5;
  MetricsMode mode = MetricsMode::pooled;
  unsigned workers = 0;
  bool add_intercept = true;
};

struct ReplicationRow {
  FitSpec spec;
  std::string label;
  int draws_ok = 0;
  std::optional<std::string> error;  // first failure, if any
  // Means over successful draws.
  double r2 = 0.0;
  double pr_g1 = 0.0;
  double nc_g1 = 0.0;
  double nc_g2 = 0.0;
  double fair_cov = 0.0;
  double in_sample_sse = 0.0;
  /// In-sample SSE was at least the OLS SSE on every draw (1e-9 relative slack).
  bool sse_not_below_ols = true;
};

struct ReplicationTable {
  int scenario = 1;
  Index n = 0;
  int draws = 0;
  std::vector<ReplicationRow> rows;
};

/// Draws `draws` samples of n rows without replacement, fits every spec on
/// each draw with 5-fold CV (group A1 protected, A2 reported), and averages.
ReplicationTable replicate_simulation(const SimPopulation& pop, int scenario, const std::vector<FitSpec>& specs,
                                      const ReplicationOptions& options = {});

/// First `n` entries of a seeded Fisher-Yates shuffle of 0..size-1.
std::vector<Index> sample_without_replacement(Index size, Index n, std::uint64_t seed);

}  // namespace fairreg
