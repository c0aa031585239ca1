#pragma once

#include "fairreg/data_model.hpp"
#include "fairreg/qp_core.hpp"

namespace fairreg {

/// Group/complement averages that every fairness constraint is built from.
struct GroupAggregates {
  Vector sum_x_g, sum_x_c;
  Vector a_g, a_c;  // mean design rows
  double sum_y_g = 0.0, sum_y_c = 0.0;
  double ybar_g = 0.0, ybar_c = 0.0;
  Index n_g = 0, n_c = 0;
  double p_hat = 0.0;

  /// Throws degenerate_group when either side is empty.
  static GroupAggregates compute(const Matrix& x, const Vector& y, MaskView mask);
};

/// Dispatches on spec.estimator. Errors are rethrown with the estimator name
/// as context.
FitResult fit(const Dataset& ds, const FitSpec& spec);

FitResult fit_ols(const Dataset& ds, double solver_tol = 1e-8);
FitResult fit_avg_constrained(const Dataset& ds, const GroupView& g, double solver_tol = 1e-8);
FitResult fit_weighted_avg(const Dataset& ds, const GroupView& g, double alpha, double solver_tol = 1e-8);
FitResult fit_cov_constrained(const Dataset& ds, const GroupView& g, double m,
                              CstarScale scale = CstarScale::constraint_sum, double solver_tol = 1e-8);
FitResult fit_mrd_penalized(const Dataset& ds, const GroupView& g, double lambda, double solver_tol = 1e-8);
FitResult fit_netcomp_penalized(const Dataset& ds, const GroupView& g, double lambda, double solver_tol = 1e-8);
/// z is in outcome units unless `relative`, in which case it is a fraction of
/// the group's mean outcome.
FitResult fit_netcomp_constrained(const Dataset& ds, const GroupView& g, double z, bool relative = false,
                                  double solver_tol = 1e-8);

/// Left-hand side of the covariance constraint,
/// (1-p) sum_g (y - x theta) - p sum_c (y - x theta), as an affine function
/// k - w'theta of theta.
struct CovarianceConstraintForm {
  Vector w;
  double k = 0.0;
  double evaluate(const Vector& theta) const { return k - w.dot(theta); }
};
CovarianceConstraintForm covariance_constraint_form(const GroupAggregates& agg);

}  // namespace fairreg
