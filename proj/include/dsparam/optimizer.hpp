#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace dsparam {

// Smooth unconstrained maximization problem. The objective fills `grad`
// with the gradient at x and returns the objective value.
struct OptProblem {
  int dim = 0;
  std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)> objective;
  double grad_tol = 1e-6;    // convergence: sup-norm of the gradient
  double value_tol = 1e-14;  // convergence: relative per-iteration gain floor
  int max_iters = 500;
};

struct OptResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;  // sup-norm at the returned point
  int iterations = 0;
  bool converged = false;
};

// BFGS quasi-Newton ascent with a backtracking line search augmented by
// one-dimensional quadratic interpolation. The interpolation step is exact
// on quadratic objectives, so concave quadratics terminate in at most
// dim + 2 iterations. The inverse-Hessian estimate is reset to identity
// whenever the curvature condition fails.
//
// Termination is declared converged either when the gradient sup-norm drops
// below grad_tol or when two consecutive iterations gain less than
// value_tol * max(|f|, 1): once per-step gains sink to the rounding
// granularity of the objective value, no line search can certify further
// ascent, so that point is the maximizer at working precision. grad_norm in
// the result always reports the actual gradient at the returned point.
// Throws ConfigError on inconsistent dimensions or missing objective,
// NumericalError if the objective returns non-finite values at the start.
OptResult bfgs_maximize(const OptProblem& prob, const Eigen::VectorXd& x0);

// Streaming linear least squares |A theta - y|^2 via a Givens-rotation QR
// accumulator: rows are rotated into an upper-triangular factor as they
// arrive, so the design matrix is never materialized. Solutions come from
// back substitution on the triangular factor (an orthogonal factorization,
// not normal equations).
class LeastSquaresAccumulator {
 public:
  // Column labels are used in rank-deficiency diagnostics; pass {} to get
  // generated names col0, col1, ...
  explicit LeastSquaresAccumulator(int num_cols, std::vector<std::string> column_labels = {});

  // Rotate one observation row (regressors + target) into the factor.
  void add_row(const Eigen::VectorXd& row, double target);

  long rows() const { return rows_; }
  int cols() const { return m_; }

  // Minimizer of the accumulated problem. Requires rows() >= cols().
  // Throws RankDeficiencyError naming the dependent columns when the
  // triangular factor is numerically rank-deficient (relative tolerance
  // rank_tol on its pivoted diagonal).
  Eigen::VectorXd solve(double rank_tol = 1e-10) const;

  // Norm of the residual A theta - y at the minimizer (maintained exactly
  // by the rotations, no second pass needed).
  double residual_norm() const { return rho_; }

 private:
  int m_;
  long rows_ = 0;
  Eigen::MatrixXd r_;      // m x m upper triangular
  Eigen::VectorXd qty_;    // rotated right-hand side
  double rho_ = 0.0;       // accumulated residual norm
  std::vector<std::string> labels_;
};

// Dense convenience wrapper over the accumulator.
// Preconditions: A.rows() == y.size() and A.rows() >= A.cols().
Eigen::VectorXd least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& y);

}  // namespace dsparam
