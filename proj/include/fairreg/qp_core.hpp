#pragma once

#include <string>
#include <vector>

#include "fairreg/data_model.hpp"

namespace fairreg {

enum class ConstraintSense { equality, le };

/// a'theta = b or a'theta <= b.
struct LinearConstraint {
  Vector a;
  double b = 0.0;
  ConstraintSense sense = ConstraintSense::equality;
};

struct KktSolution {
  Vector theta;
  /// Multiplier nu of L = SSE/2 + nu (a'theta - b); stationarity reads
  /// X'X theta = X'y - nu a. Zero for unconstrained and slack solves.
  double multiplier = 0.0;
  /// Relative max-norm of the stationarity and feasibility residuals.
  double residual_norm = 0.0;
  bool constraint_active = false;
  Index rank = 0;
  double sse = 0.0;
  std::vector<std::string> diagnostics;
};

struct SolverOptions {
  /// Singular values of the column-equilibrated design below rank_tol * max
  /// are treated as zero (minimum-norm completion).
  double rank_tol = 1e-10;
  /// Acceptance threshold for KktSolution::residual_norm.
  double kkt_tol = 1e-8;
};

/// One factorization of a least-squares problem, reused by every solve shape.
///
/// Columns are scaled to unit norm, then a thin SVD (via QR when N >= P) gives
/// the pseudo-inverse of X'X in scaled coordinates. All constrained and
/// penalized solves are rank-one updates of the least-squares solution, so a
/// two-stage estimator pays for one factorization.
///
/// Keeps pointers to `x` and `y`; both must outlive the system.
class LeastSquaresSystem {
 public:
  LeastSquaresSystem(const Matrix& x, const Vector& y, SolverOptions options = {});

  Index n() const noexcept { return x_->rows(); }
  Index p() const noexcept { return x_->cols(); }
  Index rank() const noexcept { return rank_; }
  const Matrix& gram() const noexcept { return gram_; }
  const Vector& xty() const noexcept { return xty_; }
  const SolverOptions& options() const noexcept { return options_; }

  /// min ||y - X theta||^2 (minimum-norm on rank deficiency).
  KktSolution solve() const;
  /// Least squares subject to one equality.
  KktSolution solve_eq(const LinearConstraint& c) const;
  /// Least squares subject to one <= constraint: unconstrained first, then
  /// the equality solve when that violates the bound.
  KktSolution solve_ineq(const LinearConstraint& c) const;
  /// min SSE + lambda (r0 - d'theta)^2.
  KktSolution solve_rank1_penalty(const Vector& d, double r0, double lambda) const;
  /// min SSE - lambda a'theta (+ constants), i.e. X'X theta = X'y + lambda/2 a.
  KktSolution solve_linear_penalty(const Vector& a, double lambda) const;

  double sse(const Vector& theta) const;

 private:
  Vector pinv_gram_times(const Vector& scaled) const;  // scaled coordinates
  Vector null_component(const Vector& scaled) const;
  KktSolution finish(Vector theta_scaled, std::vector<std::string> diagnostics) const;
  double stationarity_residual(const Vector& theta, const Vector& rhs, const Matrix* extra_gram) const;
  double feasibility_residual(const Vector& a, double b, const Vector& theta) const;
  void accept(KktSolution& sol, const char* what) const;

  const Matrix* x_;
  const Vector* y_;
  SolverOptions options_;
  Vector scale_;      // column scaling, theta = scale .* theta_scaled
  Matrix basis_;      // P x rank right singular vectors of the scaled design
  Vector inv_sq_;     // 1 / sigma^2 per retained direction
  Matrix gram_;       // unscaled X'X
  Vector xty_;        // unscaled X'y
  Vector theta_ls_scaled_;
  Index rank_ = 0;
};

KktSolution solve_ls(const Matrix& x, const Vector& y, const SolverOptions& options = {});
KktSolution solve_ls_eq(const Matrix& x, const Vector& y, const LinearConstraint& c,
                        const SolverOptions& options = {});
KktSolution solve_ls_ineq(const Matrix& x, const Vector& y, const LinearConstraint& c,
                          const SolverOptions& options = {});
KktSolution solve_ls_rank1_penalty(const Matrix& x, const Vector& y, const Vector& d, double r0,
                                   double lambda, const SolverOptions& options = {});
KktSolution solve_ls_linear_penalty(const Matrix& x, const Vector& y, const Vector& a, double lambda,
                                    const SolverOptions& options = {});

}  // namespace fairreg
