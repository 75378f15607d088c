#include "dsparam/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dsparam/errors.hpp"

namespace dsparam {

namespace {

struct Trial {
  double alpha = 0.0;
  double value = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd x;
  Eigen::VectorXd grad;
  bool valid = false;
};

constexpr double kArmijoSlope = 1e-4;

}  // namespace

OptResult bfgs_maximize(const OptProblem& prob, const Eigen::VectorXd& x0) {
  if (!prob.objective) throw ConfigError("optimizer: objective is not set");
  if (prob.dim < 1 || x0.size() != prob.dim)
    throw ConfigError("optimizer: starting point does not match problem dimension");
  if (prob.max_iters < 1) throw ConfigError("optimizer: max_iters must be >= 1");

  const int n = prob.dim;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd g(n);
  double f = prob.objective(x, g);
  if (!std::isfinite(f) || !g.allFinite())
    throw NumericalError("optimizer: objective is not finite at the starting point");

  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);

  auto evaluate = [&](double alpha, const Eigen::VectorXd& d, Trial& t) {
    t.alpha = alpha;
    t.x = x + alpha * d;
    t.grad.resize(n);
    t.value = prob.objective(t.x, t.grad);
    t.valid = std::isfinite(t.value) && t.grad.allFinite();
  };

  OptResult res;
  res.x = x;
  res.value = f;
  res.grad_norm = g.lpNorm<Eigen::Infinity>();
  int stagnant = 0;  // consecutive iterations whose gain sits at the value noise floor
  for (int iter = 0; iter < prob.max_iters; ++iter) {
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    if (gnorm <= prob.grad_tol) {
      res.x = x;
      res.value = f;
      res.grad_norm = gnorm;
      res.iterations = iter;
      res.converged = true;
      return res;
    }

    Eigen::VectorXd d = h * g;
    double gd = g.dot(d);
    if (!(gd > 0.0) || !d.allFinite()) {
      // Not an ascent direction: drop the curvature estimate.
      h.setIdentity();
      d = g;
      gd = g.squaredNorm();
    }

    // Line search for phi(alpha) = f(x + alpha d), phi'(0) = gd > 0. A
    // quadratic through phi(0), phi'(0), phi(1) supplies a trial maximizer
    // that is exact when the objective is quadratic along d; Armijo
    // backtracking covers everything else.
    Trial unit;
    evaluate(1.0, d, unit);
    bool any_finite_trial = unit.valid;
    auto armijo = [&](const Trial& t) {
      return t.valid && t.value >= f + kArmijoSlope * t.alpha * gd;
    };

    Trial accepted;
    if (unit.valid) {
      const double curv = 2.0 * (f + gd - unit.value);  // phi ~ f + gd a - curv a^2 / 2
      if (curv > 0.0) {
        double alpha_q = gd / curv;
        if (std::isfinite(alpha_q) && alpha_q > 1e-16) {
          if (alpha_q > 1e8) alpha_q = 1e8;
          Trial quad;
          evaluate(alpha_q, d, quad);
          any_finite_trial = any_finite_trial || quad.valid;
          if (armijo(quad) && (!armijo(unit) || quad.value >= unit.value)) accepted = quad;
        }
      }
    }
    if (!accepted.valid && armijo(unit)) accepted = unit;
    if (!accepted.valid) {
      double alpha = 0.5;
      for (int k = 0; k < 60 && !accepted.valid; ++k, alpha *= 0.5) {
        Trial t;
        evaluate(alpha, d, t);
        any_finite_trial = any_finite_trial || t.valid;
        if (armijo(t)) accepted = t;
      }
    }
    if (!accepted.valid) {
      res.x = x;
      res.value = f;
      res.grad_norm = gnorm;
      res.iterations = iter + 1;
      if (!any_finite_trial) {
        // The objective is non-finite everywhere the search looked; report
        // the best point without claiming convergence.
        res.converged = false;
        return res;
      }
      // Every finite trial failed the sufficient-increase test, so the
      // attainable gain is below the rounding granularity of the value.
      // One strike: retry from a steepest-ascent direction. Two strikes:
      // the point cannot be improved at working precision.
      ++stagnant;
      if (stagnant >= 2) {
        res.converged = true;
        return res;
      }
      h.setIdentity();
      continue;
    }

    const double gain = accepted.value - f;
    const double value_scale = std::max({std::abs(f), std::abs(accepted.value), 1.0});
    if (gain <= prob.value_tol * value_scale) {
      ++stagnant;
    } else {
      stagnant = 0;
    }

    const Eigen::VectorXd step = accepted.x - x;
    const Eigen::VectorXd yk = g - accepted.grad;  // curvature pair of the minimization view
    const double sy = step.dot(yk);
    if (sy > 1e-12 * step.norm() * yk.norm() && sy > 0.0) {
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h * yk;
      const double yhy = yk.dot(hy);
      // Sherman-Morrison form of the inverse BFGS update.
      h += (rho * rho * yhy + rho) * (step * step.transpose());
      h -= rho * (hy * step.transpose() + step * hy.transpose());
    } else {
      h.setIdentity();
    }

    x = accepted.x;
    f = accepted.value;
    g = accepted.grad;
    res.iterations = iter + 1;
    if (stagnant >= 2) {
      res.x = x;
      res.value = f;
      res.grad_norm = g.lpNorm<Eigen::Infinity>();
      res.converged = true;
      return res;
    }
  }

  res.x = x;
  res.value = f;
  res.grad_norm = g.lpNorm<Eigen::Infinity>();
  res.converged = res.grad_norm <= prob.grad_tol;
  return res;
}

LeastSquaresAccumulator::LeastSquaresAccumulator(int num_cols,
                                                 std::vector<std::string> column_labels)
    : m_(num_cols),
      r_(Eigen::MatrixXd::Zero(num_cols, num_cols)),
      qty_(Eigen::VectorXd::Zero(num_cols)),
      labels_(std::move(column_labels)) {
  if (m_ < 1) throw ConfigError("least squares needs at least one column");
  if (labels_.empty()) {
    labels_.reserve(m_);
    for (int i = 0; i < m_; ++i) labels_.push_back("col" + std::to_string(i));
  }
  if (static_cast<int>(labels_.size()) != m_)
    throw ConfigError("least squares: one label per column required");
}

void LeastSquaresAccumulator::add_row(const Eigen::VectorXd& row, double target) {
  if (row.size() != m_) throw ConfigError("least squares: row has wrong number of columns");
  Eigen::VectorXd v = row;
  double t = target;
  for (int i = 0; i < m_; ++i) {
    if (v[i] == 0.0) continue;
    const double a = r_(i, i);
    const double b = v[i];
    const double rr = std::hypot(a, b);
    const double c = a / rr;
    const double s = b / rr;
    r_(i, i) = rr;
    v[i] = 0.0;
    for (int j = i + 1; j < m_; ++j) {
      const double rij = r_(i, j);
      const double vj = v[j];
      r_(i, j) = c * rij + s * vj;
      v[j] = c * vj - s * rij;
    }
    const double qi = qty_[i];
    qty_[i] = c * qi + s * t;
    t = c * t - s * qi;
  }
  rho_ = std::hypot(rho_, t);
  ++rows_;
}

Eigen::VectorXd LeastSquaresAccumulator::solve(double rank_tol) const {
  if (rows_ < m_) throw ConfigError("least squares: fewer rows than columns");

  // The triangular factor satisfies A^T A = R^T R, so column dependencies
  // of the (never materialized) design matrix show up in R itself. A small
  // pivoted QR of R exposes them.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(r_);
  Eigen::VectorXd pivots = qr.matrixR().diagonal().cwiseAbs();
  const double dmax = pivots.maxCoeff();
  int rank = 0;
  for (int i = 0; i < m_; ++i) {
    if (pivots[i] > rank_tol * dmax && dmax > 0.0) ++rank;
  }
  if (rank < m_) {
    std::vector<std::string> dependent;
    const auto& perm = qr.colsPermutation().indices();
    for (int i = rank; i < m_; ++i) dependent.push_back(labels_[perm[i]]);
    std::string msg = "least squares: regressors are linearly dependent:";
    for (const auto& c : dependent) msg += " " + c;
    throw RankDeficiencyError(msg, dependent);
  }

  Eigen::VectorXd x(m_);
  for (int i = m_ - 1; i >= 0; --i) {
    double acc = qty_[i];
    for (int j = i + 1; j < m_; ++j) acc -= r_(i, j) * x[j];
    x[i] = acc / r_(i, i);
  }
  return x;
}

Eigen::VectorXd least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& y) {
  if (A.rows() != y.size()) throw ConfigError("least squares: row count mismatch");
  if (A.rows() < A.cols()) throw ConfigError("least squares: underdetermined system");
  LeastSquaresAccumulator acc(static_cast<int>(A.cols()));
  for (Eigen::Index i = 0; i < A.rows(); ++i) acc.add_row(A.row(i), y[i]);
  return acc.solve();
}

}  // namespace dsparam
