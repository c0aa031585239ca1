#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairreg/error.hpp"

namespace fairreg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// 0/1 membership flags, one per observation.
using Mask = std::vector<std::uint8_t>;
using MaskView = std::span<const std::uint8_t>;
using Values = std::span<const double>;

inline Values as_values(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

inline constexpr std::string_view kInterceptName = "intercept";

struct Group {
  std::string name;
  Mask mask;
};

/// Immutable outcome/design/group bundle shared read-only by every fit.
///
/// The design matrix is dense N x P. When an intercept is present it is an
/// ordinary column named "intercept" (always column 0); solvers never add one
/// implicitly.
class Dataset {
 public:
  Dataset(Vector y, Matrix x, std::vector<std::string> feature_names,
          std::vector<Group> groups, std::vector<std::string> ids = {});

  const Vector& y() const noexcept { return y_; }
  const Matrix& x() const noexcept { return x_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const std::vector<Group>& groups() const noexcept { return groups_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  Index n() const noexcept { return y_.size(); }
  Index p() const noexcept { return x_.cols(); }
  bool has_intercept() const noexcept;

  /// Throws unknown_group when absent.
  const Group& group(std::string_view label) const;
  bool has_group(std::string_view label) const noexcept;

  /// Rows in the given order; ids and groups follow.
  Dataset subset(std::span<const Index> rows) const;

 private:
  Vector y_;
  Matrix x_;
  std::vector<std::string> feature_names_;
  std::vector<Group> groups_;
  std::vector<std::string> ids_;
};

/// Protected group g and its complement.
struct GroupView {
  std::string label;
  MaskView mask;  // aliases the dataset's storage
  Index n_g = 0;
  Index n_c = 0;
  double p_hat = 0.0;
};

/// Throws unknown_group, or degenerate_group when either side is empty.
GroupView group_view(const Dataset& ds, std::string_view label);

/// Counting only; never throws on degenerate masks.
GroupView count_group(std::string_view label, MaskView mask);

struct CsvLoadOptions {
  std::string outcome_col;
  std::vector<std::string> group_cols;
  /// Empty selects every column that is not the outcome, a group, or the id.
  std::vector<std::string> feature_cols;
  bool add_intercept = true;
  /// Column carrying observation ids; when absent ids are 1-based row numbers.
  std::optional<std::string> id_col;
  /// Drop 0/1 feature columns with fewer than this many ones (0 disables).
  Index min_binary_count = 0;
};

Dataset load_csv(const std::filesystem::path& path, const CsvLoadOptions& options);
Dataset parse_csv(std::string_view text, const CsvLoadOptions& options);

/// Writes id (when `with_ids`), outcome, features (intercept omitted), groups.
void write_csv(const Dataset& ds, const std::filesystem::path& path,
               std::string_view outcome_col = "y", bool with_ids = true);
std::string to_csv(const Dataset& ds, std::string_view outcome_col = "y", bool with_ids = true);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

enum class Estimator {
  ols,
  avg_constrained,
  weighted_avg_constrained,
  cov_constrained,
  mrd_penalized,
  netcomp_penalized,
  netcomp_constrained,
};

std::string_view to_string(Estimator e);
Estimator estimator_from_string(std::string_view name);

/// How the covariance bound c = m * c* is scaled.
enum class CstarScale {
  /// c* is the constraint's left-hand side at the OLS fit, so m = 1 is exactly
  /// non-binding.
  constraint_sum,
  /// c* is the 1/N covariance; since the constraint itself is an unscaled
  /// sum, every m in [0,1] lands essentially on the zero-covariance bound.
  covariance,
};

struct FitSpec {
  Estimator estimator = Estimator::ols;
  std::optional<double> lambda;
  std::optional<double> alpha;
  std::optional<double> m;
  std::optional<double> z;
  std::string group_label;
  double solver_tol = 1e-8;
  CstarScale cstar_scale = CstarScale::constraint_sum;
  /// z is interpreted as a fraction of the group's mean outcome.
  bool z_relative_to_group_mean = false;

  /// Throws config when a hyperparameter is missing, superfluous, or out of range.
  void validate() const;

  /// Human-readable row label, e.g. "Net Compensation, lambda=1000".
  std::string label() const;

  /// Compact form "estimator[:key=value,...]", keys lambda, alpha, m, z,
  /// scale (constraint_sum|covariance), relative (0|1), tol. `group` fills
  /// the protected label for non-OLS estimators.
  static FitSpec parse(std::string_view text, const std::string& group);
  std::string to_text() const;

  static FitSpec ols();
  static FitSpec avg_constrained(std::string group);
  static FitSpec weighted_avg(std::string group, double alpha);
  static FitSpec cov_constrained(std::string group, double m,
                                 CstarScale scale = CstarScale::constraint_sum);
  static FitSpec mrd_penalized(std::string group, double lambda);
  static FitSpec netcomp_penalized(std::string group, double lambda);
  static FitSpec netcomp_constrained(std::string group, double z, bool relative = false);
};

/// Rule-of-thumb penalty for net compensation penalized regression.
inline double default_lambda(Index n) { return static_cast<double>(n) / 10.0; }

struct FitResult {
  Vector theta;
  std::vector<std::string> feature_names;
  FitSpec spec;
  bool constraint_active = false;
  /// Multiplier of the constraint in L = SSE/2 + nu (a'theta - b); 0 when slack.
  double multiplier = 0.0;
  double kkt_residual = 0.0;
  /// Sum of squared errors on the fitting data.
  double objective_value = 0.0;
  /// Penalty term evaluated with constants restored (0 for non-penalized fits).
  double penalty_value = 0.0;
  Index rank = 0;
  std::vector<std::string> diagnostics;

  Vector predict(const Matrix& x) const { return x * theta; }
};

}  // namespace fairreg
