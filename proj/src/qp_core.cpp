#include "fairreg/qp_core.hpp"

#include <cmath>
#include <sstream>

namespace fairreg {

namespace {

constexpr double kNullTol = 1e-8;

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) fail(ErrorKind::numeric, std::string(what) + " contains non-finite values");
}

std::string sci(double v) {
  std::ostringstream out;
  out.precision(3);
  out << std::scientific << v;
  return out.str();
}

}  // namespace

LeastSquaresSystem::LeastSquaresSystem(const Matrix& x, const Vector& y, SolverOptions options)
    : x_(&x), y_(&y), options_(options) {
  if (x.rows() < 1 || x.cols() < 1) fail(ErrorKind::numeric, "design must be at least 1 x 1");
  if (y.size() != x.rows()) fail(ErrorKind::numeric, "outcome length does not match design rows");
  if (!x.allFinite()) fail(ErrorKind::numeric, "design contains non-finite values");
  require_finite(y, "outcome");

  const Index cols = x.cols();
  gram_ = Matrix::Zero(cols, cols);
  gram_.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  gram_ = gram_.selfadjointView<Eigen::Lower>();
  xty_ = x.transpose() * y;

  scale_.resize(cols);
  for (Index j = 0; j < cols; ++j) {
    const double norm = std::sqrt(gram_(j, j));
    scale_[j] = norm > 0.0 ? 1.0 / norm : 1.0;
  }

  Matrix v;
  Vector sigma;
  if (x.rows() >= cols) {
    Matrix scaled = x * scale_.asDiagonal();
    Eigen::HouseholderQR<Eigen::Ref<Matrix>> qr(scaled);
    Matrix r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Matrix> svd(r, Eigen::ComputeFullV);
    v = svd.matrixV();
    sigma = svd.singularValues();
  } else {
    Matrix scaled = x * scale_.asDiagonal();
    Eigen::BDCSVD<Matrix> svd(scaled, Eigen::ComputeThinV);
    v = svd.matrixV();
    sigma = svd.singularValues();
  }
  const double smax = sigma.size() ? sigma.maxCoeff() : 0.0;
  rank_ = 0;
  for (Index i = 0; i < sigma.size(); ++i) {
    if (smax > 0.0 && sigma[i] > options_.rank_tol * smax) ++rank_;
  }
  // JacobiSVD/BDCSVD order singular values decreasingly.
  basis_ = v.leftCols(rank_);
  inv_sq_ = sigma.head(rank_).array().square().inverse();
  theta_ls_scaled_ = pinv_gram_times(scale_.cwiseProduct(xty_));
}

Vector LeastSquaresSystem::pinv_gram_times(const Vector& scaled) const {
  return basis_ * inv_sq_.cwiseProduct(basis_.transpose() * scaled);
}

Vector LeastSquaresSystem::null_component(const Vector& scaled) const {
  return scaled - basis_ * (basis_.transpose() * scaled);
}

double LeastSquaresSystem::sse(const Vector& theta) const {
  return (*y_ - *x_ * theta).squaredNorm();
}

double LeastSquaresSystem::stationarity_residual(const Vector& theta, const Vector& rhs,
                                                 const Matrix* extra_gram) const {
  Vector lhs = gram_ * theta;
  Vector magnitude = gram_.cwiseAbs() * theta.cwiseAbs();
  if (extra_gram) {
    lhs += *extra_gram * theta;
    magnitude += extra_gram->cwiseAbs() * theta.cwiseAbs();
  }
  const double denom = std::max(magnitude.lpNorm<Eigen::Infinity>(), rhs.lpNorm<Eigen::Infinity>());
  const double num = (lhs - rhs).lpNorm<Eigen::Infinity>();
  return denom > 0.0 ? num / denom : num;
}

double LeastSquaresSystem::feasibility_residual(const Vector& a, double b, const Vector& theta) const {
  const double denom = std::max(a.cwiseProduct(theta).cwiseAbs().sum(), std::abs(b));
  const double num = std::abs(a.dot(theta) - b);
  return denom > 0.0 ? num / denom : num;
}

KktSolution LeastSquaresSystem::finish(Vector theta_scaled, std::vector<std::string> diagnostics) const {
  KktSolution sol;
  sol.theta = scale_.cwiseProduct(theta_scaled);
  sol.rank = rank_;
  sol.sse = sse(sol.theta);
  sol.diagnostics = std::move(diagnostics);
  if (rank_ < p()) {
    sol.diagnostics.push_back("rank-deficient design: rank " + std::to_string(rank_) + " of " +
                              std::to_string(p()) + ", minimum-norm completion");
  }
  return sol;
}

void LeastSquaresSystem::accept(KktSolution& sol, const char* what) const {
  if (!sol.theta.allFinite()) fail(ErrorKind::solver, std::string(what) + ": non-finite solution");
  if (sol.residual_norm > options_.kkt_tol) {
    fail(ErrorKind::solver, std::string(what) + ": KKT residual " + sci(sol.residual_norm) +
                                " exceeds tolerance " + sci(options_.kkt_tol));
  }
}

KktSolution LeastSquaresSystem::solve() const {
  KktSolution sol = finish(theta_ls_scaled_, {});
  sol.residual_norm = stationarity_residual(sol.theta, xty_, nullptr);
  accept(sol, "least squares");
  return sol;
}

KktSolution LeastSquaresSystem::solve_eq(const LinearConstraint& c) const {
  if (c.a.size() != p()) fail(ErrorKind::numeric, "constraint length does not match design columns");
  require_finite(c.a, "constraint");
  if (!std::isfinite(c.b)) fail(ErrorKind::numeric, "constraint bound is not finite");
  if (c.a.isZero(0.0)) {
    if (c.b != 0.0) fail(ErrorKind::infeasible, "zero constraint row with nonzero right-hand side");
    KktSolution sol = solve();
    sol.diagnostics.push_back("vacuous constraint: zero row with zero right-hand side");
    return sol;
  }
  const Vector a_scaled = scale_.cwiseProduct(c.a);
  const double gap = c.b - a_scaled.dot(theta_ls_scaled_);
  const Vector null = null_component(a_scaled);
  Vector theta_scaled;
  double nu = 0.0;
  std::vector<std::string> diag;
  if (null.norm() > kNullTol * a_scaled.norm()) {
    // Moving along the design's null space leaves the fit unchanged.
    theta_scaled = theta_ls_scaled_ + (gap / null.squaredNorm()) * null;
    diag.push_back("constraint satisfied inside the design null space at no SSE cost");
  } else {
    const Vector h = pinv_gram_times(a_scaled);
    const double q = a_scaled.dot(h);
    if (!(q > 0.0)) fail(ErrorKind::solver, "singular bordered system: constraint curvature " + sci(q));
    nu = -gap / q;
    theta_scaled = theta_ls_scaled_ - nu * h;
  }
  KktSolution sol = finish(std::move(theta_scaled), std::move(diag));
  sol.multiplier = nu;
  sol.constraint_active = true;
  const Vector rhs = xty_ - nu * c.a;
  sol.residual_norm = std::max(stationarity_residual(sol.theta, rhs, nullptr),
                               feasibility_residual(c.a, c.b, sol.theta));
  accept(sol, "equality-constrained least squares");
  return sol;
}

KktSolution LeastSquaresSystem::solve_ineq(const LinearConstraint& c) const {
  if (c.a.size() != p()) fail(ErrorKind::numeric, "constraint length does not match design columns");
  require_finite(c.a, "constraint");
  if (!std::isfinite(c.b)) fail(ErrorKind::numeric, "constraint bound is not finite");
  if (c.a.isZero(0.0)) {
    if (c.b < 0.0) fail(ErrorKind::infeasible, "zero constraint row with negative bound: 0 <= " + sci(c.b));
    KktSolution sol = solve();
    sol.diagnostics.push_back("vacuous constraint: zero row with nonnegative bound");
    return sol;
  }
  KktSolution free = solve();
  const double lhs = c.a.dot(free.theta);
  const double scale = std::max(c.a.cwiseProduct(free.theta).cwiseAbs().sum(), std::abs(c.b));
  if (lhs - c.b <= options_.kkt_tol * scale) {
    free.constraint_active = false;
    free.multiplier = 0.0;
    return free;
  }
  LinearConstraint eq = c;
  eq.sense = ConstraintSense::equality;
  KktSolution sol = solve_eq(eq);
  // Active: nu > 0 by construction; clip roundoff for the sign invariant.
  if (sol.multiplier < 0.0) sol.multiplier = 0.0;
  return sol;
}

KktSolution LeastSquaresSystem::solve_rank1_penalty(const Vector& d, double r0, double lambda) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorKind::numeric, "lambda must be finite and >= 0");
  if (d.size() != p()) fail(ErrorKind::numeric, "penalty direction length does not match design columns");
  require_finite(d, "penalty direction");
  if (!std::isfinite(r0)) fail(ErrorKind::numeric, "penalty offset is not finite");
  if (lambda == 0.0) return solve();
  if (d.isZero(0.0)) {
    KktSolution sol = solve();
    sol.diagnostics.push_back("zero penalty direction: penalty is constant in theta");
    return sol;
  }
  const Vector d_scaled = scale_.cwiseProduct(d);
  const double gap = r0 - d_scaled.dot(theta_ls_scaled_);
  const Vector null = null_component(d_scaled);
  Vector theta_scaled;
  std::vector<std::string> diag;
  if (null.norm() > kNullTol * d_scaled.norm()) {
    theta_scaled = theta_ls_scaled_ + (gap / null.squaredNorm()) * null;
    diag.push_back("penalty zeroed inside the design null space at no SSE cost");
  } else {
    const Vector h = pinv_gram_times(d_scaled);
    const double k = lambda * gap / (1.0 + lambda * d_scaled.dot(h));
    theta_scaled = theta_ls_scaled_ + k * h;
  }
  KktSolution sol = finish(std::move(theta_scaled), std::move(diag));
  const Matrix extra = lambda * d * d.transpose();
  const Vector rhs = xty_ + (lambda * r0) * d;
  sol.residual_norm = stationarity_residual(sol.theta, rhs, &extra);
  accept(sol, "rank-one penalized least squares");
  return sol;
}

KktSolution LeastSquaresSystem::solve_linear_penalty(const Vector& a, double lambda) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorKind::numeric, "lambda must be finite and >= 0");
  if (a.size() != p()) fail(ErrorKind::numeric, "penalty vector length does not match design columns");
  require_finite(a, "penalty vector");
  if (lambda == 0.0 || a.isZero(0.0)) return solve();
  const Vector a_scaled = scale_.cwiseProduct(a);
  if (null_component(a_scaled).norm() > kNullTol * a_scaled.norm()) {
    fail(ErrorKind::solver, "linear penalty is unbounded below along the design null space");
  }
  Vector theta_scaled = theta_ls_scaled_ + (0.5 * lambda) * pinv_gram_times(a_scaled);
  KktSolution sol = finish(std::move(theta_scaled), {});
  const Vector rhs = xty_ + (0.5 * lambda) * a;
  sol.residual_norm = stationarity_residual(sol.theta, rhs, nullptr);
  accept(sol, "linearly penalized least squares");
  return sol;
}

KktSolution solve_ls(const Matrix& x, const Vector& y, const SolverOptions& options) {
  return LeastSquaresSystem(x, y, options).solve();
}

KktSolution solve_ls_eq(const Matrix& x, const Vector& y, const LinearConstraint& c,
                        const SolverOptions& options) {
  return LeastSquaresSystem(x, y, options).solve_eq(c);
}

KktSolution solve_ls_ineq(const Matrix& x, const Vector& y, const LinearConstraint& c,
                          const SolverOptions& options) {
  return LeastSquaresSystem(x, y, options).solve_ineq(c);
}

KktSolution solve_ls_rank1_penalty(const Matrix& x, const Vector& y, const Vector& d, double r0,
                                   double lambda, const SolverOptions& options) {
  return LeastSquaresSystem(x, y, options).solve_rank1_penalty(d, r0, lambda);
}

KktSolution solve_ls_linear_penalty(const Matrix& x, const Vector& y, const Vector& a, double lambda,
                                    const SolverOptions& options) {
  return LeastSquaresSystem(x, y, options).solve_linear_penalty(a, lambda);
}

}  // namespace fairreg
