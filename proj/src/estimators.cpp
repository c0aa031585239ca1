#include "fairreg/estimators.hpp"

#include <cmath>

namespace fairreg {

GroupAggregates GroupAggregates::compute(const Matrix& x, const Vector& y, MaskView mask) {
  if (static_cast<Index>(mask.size()) != x.rows()) fail(ErrorKind::schema, "group mask length mismatch");
  GroupAggregates agg;
  agg.sum_x_g = Vector::Zero(x.cols());
  agg.sum_x_c = Vector::Zero(x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) {
      agg.sum_x_g += x.row(i).transpose();
      agg.sum_y_g += y[i];
      ++agg.n_g;
    } else {
      agg.sum_x_c += x.row(i).transpose();
      agg.sum_y_c += y[i];
      ++agg.n_c;
    }
  }
  if (agg.n_g == 0) fail(ErrorKind::degenerate_group, "protected group has no members");
  if (agg.n_c == 0) fail(ErrorKind::degenerate_group, "protected group has an empty complement");
  agg.a_g = agg.sum_x_g / static_cast<double>(agg.n_g);
  agg.a_c = agg.sum_x_c / static_cast<double>(agg.n_c);
  agg.ybar_g = agg.sum_y_g / static_cast<double>(agg.n_g);
  agg.ybar_c = agg.sum_y_c / static_cast<double>(agg.n_c);
  agg.p_hat = static_cast<double>(agg.n_g) / static_cast<double>(agg.n_g + agg.n_c);
  return agg;
}

CovarianceConstraintForm covariance_constraint_form(const GroupAggregates& agg) {
  CovarianceConstraintForm form;
  form.w = (1.0 - agg.p_hat) * agg.sum_x_g - agg.p_hat * agg.sum_x_c;
  form.k = (1.0 - agg.p_hat) * agg.sum_y_g - agg.p_hat * agg.sum_y_c;
  return form;
}

namespace {

SolverOptions solver_options(double tol) {
  SolverOptions opts;
  opts.kkt_tol = tol;
  return opts;
}

FitResult to_fit(const Dataset& ds, FitSpec spec, KktSolution sol) {
  FitResult r;
  r.theta = std::move(sol.theta);
  r.feature_names = ds.feature_names();
  r.spec = std::move(spec);
  r.constraint_active = sol.constraint_active;
  r.multiplier = sol.multiplier;
  r.kkt_residual = sol.residual_norm;
  r.objective_value = sol.sse;
  r.rank = sol.rank;
  r.diagnostics = std::move(sol.diagnostics);
  return r;
}

GroupAggregates aggregates(const Dataset& ds, const GroupView& g) {
  return GroupAggregates::compute(ds.x(), ds.y(), g.mask);
}

FitSpec spec_for(Estimator e, const GroupView& g, double tol) {
  FitSpec s;
  s.estimator = e;
  s.group_label = g.label;
  s.solver_tol = tol;
  return s;
}

}  // namespace

FitResult fit_ols(const Dataset& ds, double solver_tol) {
  LeastSquaresSystem sys(ds.x(), ds.y(), solver_options(solver_tol));
  FitSpec spec = FitSpec::ols();
  spec.solver_tol = solver_tol;
  return to_fit(ds, spec, sys.solve());
}

FitResult fit_avg_constrained(const Dataset& ds, const GroupView& g, double solver_tol) {
  const GroupAggregates agg = aggregates(ds, g);
  if (agg.a_g.isZero(0.0) && agg.ybar_g != 0.0) {
    fail(ErrorKind::infeasible, "group members have all-zero features but nonzero mean outcome");
  }
  LeastSquaresSystem sys(ds.x(), ds.y(), solver_options(solver_tol));
  LinearConstraint c{agg.a_g, agg.ybar_g, ConstraintSense::equality};
  return to_fit(ds, spec_for(Estimator::avg_constrained, g, solver_tol), sys.solve_eq(c));
}

FitResult fit_weighted_avg(const Dataset& ds, const GroupView& g, double alpha, double solver_tol) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorKind::config, "alpha must be in [0,1]");
  const GroupAggregates agg = aggregates(ds, g);
  LeastSquaresSystem sys(ds.x(), ds.y(), solver_options(solver_tol));
  const KktSolution ols = sys.solve();
  const double target = (1.0 - alpha) * agg.ybar_g + alpha * agg.a_g.dot(ols.theta);
  if (agg.a_g.isZero(0.0) && target != 0.0) {
    fail(ErrorKind::infeasible, "group members have all-zero features but nonzero target");
  }
  FitSpec spec = spec_for(Estimator::weighted_avg_constrained, g, solver_tol);
  spec.alpha = alpha;
  return to_fit(ds, spec, sys.solve_eq({agg.a_g, target, ConstraintSense::equality}));
}

FitResult fit_cov_constrained(const Dataset& ds, const GroupView& g, double m, CstarScale scale,
                              double solver_tol) {
  if (!(m >= 0.0 && m <= 1.0)) fail(ErrorKind::config, "m must be in [0,1]");
  const GroupAggregates agg = aggregates(ds, g);
  const CovarianceConstraintForm form = covariance_constraint_form(agg);
  LeastSquaresSystem sys(ds.x(), ds.y(), solver_options(solver_tol));
  KktSolution ols = sys.solve();
  FitSpec spec = spec_for(Estimator::cov_constrained, g, solver_tol);
  spec.m = m;
  spec.cstar_scale = scale;

  const double cstar = form.evaluate(ols.theta);
  if (!(cstar > 0.0)) {
    ols.diagnostics.push_back("vacuous covariance constraint: group is not underpredicted at OLS (c* = " +
                              format_double(cstar) + ")");
    return to_fit(ds, spec, std::move(ols));
  }
  const double n = static_cast<double>(agg.n_g + agg.n_c);
  const double bound = scale == CstarScale::constraint_sum ? m * cstar : m * cstar / n;
  LinearConstraint c{-form.w, bound - form.k, ConstraintSense::le};
  KktSolution sol = sys.solve_ineq(c);
  sol.diagnostics.push_back("c* = " + format_double(cstar) + ", bound = " + format_double(bound));
  return to_fit(ds, spec, std::move(sol));
}

FitResult fit_mrd_penalized(const Dataset& ds, const GroupView& g, double lambda, double solver_tol) {
  if (!(lambda >= 0.0)) fail(ErrorKind::config, "lambda must be >= 0");
  const GroupAggregates agg = aggregates(ds, g);
  const Vector d = agg.a_g - agg.a_c;
  const double r0 = agg.ybar_g - agg.ybar_c;
  LeastSquaresSystem sys(ds.x(), ds.y(), solver_options(solver_tol));
  FitSpec spec = spec_for(Estimator::mrd_penalized, g, solver_tol);
  spec.lambda = lambda;
  FitResult r = to_fit(ds, spec, sys.solve_rank1_penalty(d, r0, lambda));
  const double gap = r0 - d.dot(r.theta);
  r.penalty_value = lambda * gap * gap;
  return r;
}

FitResult fit_netcomp_penalized(const Dataset& ds, const GroupView& g, double lambda, double solver_tol) {
  if (!(lambda >= 0.0)) fail(ErrorKind::config, "lambda must be >= 0");
  const GroupAggregates agg = aggregates(ds, g);
  LeastSquaresSystem sys(ds.x(), ds.y(), solver_options(solver_tol));
  FitSpec spec = spec_for(Estimator::netcomp_penalized, g, solver_tol);
  spec.lambda = lambda;
  FitResult r = to_fit(ds, spec, sys.solve_linear_penalty(agg.a_g, lambda));
  r.penalty_value = lambda * (agg.ybar_g - agg.a_g.dot(r.theta));
  return r;
}

FitResult fit_netcomp_constrained(const Dataset& ds, const GroupView& g, double z, bool relative,
                                  double solver_tol) {
  if (!(z >= 0.0)) fail(ErrorKind::config, "z must be >= 0");
  const GroupAggregates agg = aggregates(ds, g);
  const double bound = relative ? z * agg.ybar_g : z;
  LeastSquaresSystem sys(ds.x(), ds.y(), solver_options(solver_tol));
  FitSpec spec = spec_for(Estimator::netcomp_constrained, g, solver_tol);
  spec.z = z;
  spec.z_relative_to_group_mean = relative;
  // ybar_g - a_g'theta <= bound
  return to_fit(ds, spec, sys.solve_ineq({-agg.a_g, bound - agg.ybar_g, ConstraintSense::le}));
}

FitResult fit(const Dataset& ds, const FitSpec& spec) {
  try {
    spec.validate();
    if (spec.estimator == Estimator::ols) {
      FitResult r = fit_ols(ds, spec.solver_tol);
      r.spec = spec;
      return r;
    }
    const GroupView g = group_view(ds, spec.group_label);
    FitResult r;
    switch (spec.estimator) {
      case Estimator::ols: break;
      case Estimator::avg_constrained: r = fit_avg_constrained(ds, g, spec.solver_tol); break;
      case Estimator::weighted_avg_constrained: r = fit_weighted_avg(ds, g, *spec.alpha, spec.solver_tol); break;
      case Estimator::cov_constrained:
        r = fit_cov_constrained(ds, g, *spec.m, spec.cstar_scale, spec.solver_tol);
        break;
      case Estimator::mrd_penalized: r = fit_mrd_penalized(ds, g, *spec.lambda, spec.solver_tol); break;
      case Estimator::netcomp_penalized: r = fit_netcomp_penalized(ds, g, *spec.lambda, spec.solver_tol); break;
      case Estimator::netcomp_constrained:
        r = fit_netcomp_constrained(ds, g, *spec.z, spec.z_relative_to_group_mean, spec.solver_tol);
        break;
    }
    r.spec = spec;
    return r;
  } catch (const Error& e) {
    throw e.with_context(std::string(to_string(spec.estimator)));
  }
}

}  // namespace fairreg
