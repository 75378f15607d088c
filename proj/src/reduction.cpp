#include "dsparam/reduction.hpp"

#include "dsparam/errors.hpp"
#include "dsparam/lorenz96.hpp"

namespace dsparam {

void ReducedMap::validate() const {
  if (K < 4) throw ConfigError("reduced map requires K >= 4");
  if (!(delta > 0.0)) throw ConfigError("reduced map requires delta > 0");
}

void truncated_rhs(double F, const Eigen::VectorXd& x, Eigen::VectorXd& out) {
  const Eigen::Index K = x.size();
  out.resize(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double xm1 = x[(k + K - 1) % K];
    const double xp1 = x[(k + 1) % K];
    const double xm2 = x[(k + K - 2) % K];
    out[k] = xm1 * (xp1 - xm2) - x[k] + F;
  }
}

Eigen::VectorXd truncated_rhs(double F, const Eigen::VectorXd& x) {
  Eigen::VectorXd out;
  truncated_rhs(F, x, out);
  return out;
}

Eigen::VectorXd reduced_increment(const ReducedMap& m, const Eigen::VectorXd& x) {
  m.validate();
  if (x.size() != m.K) throw ConfigError("state dimension does not match the reduced map");
  const double F = m.F;
  const double h = m.delta;
  switch (m.scheme) {
    case OneStepScheme::Euler:
      // (x + h f(x) - x)/h collapses to the field itself.
      return truncated_rhs(F, x);
    case OneStepScheme::Rk2: {
      // Midpoint rule: increment is the field at x + (h/2) f(x).
      Eigen::VectorXd k1 = truncated_rhs(F, x);
      return truncated_rhs(F, Eigen::VectorXd(x + (0.5 * h) * k1));
    }
    case OneStepScheme::Rk4: {
      Eigen::VectorXd k1 = truncated_rhs(F, x);
      Eigen::VectorXd k2 = truncated_rhs(F, Eigen::VectorXd(x + (0.5 * h) * k1));
      Eigen::VectorXd k3 = truncated_rhs(F, Eigen::VectorXd(x + (0.5 * h) * k2));
      Eigen::VectorXd k4 = truncated_rhs(F, Eigen::VectorXd(x + h * k3));
      return (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    }
  }
  throw ConfigError("unknown one-step scheme");
}

Eigen::VectorXd reduced_step(const ReducedMap& m, const Eigen::VectorXd& x) {
  return x + m.delta * reduced_increment(m, x);
}

Eigen::MatrixXd extract_discrepancy(const ReducedMap& m, const Eigen::MatrixXd& x_obs) {
  m.validate();
  if (x_obs.cols() != m.K) throw ConfigError("observation columns do not match the reduced map");
  if (x_obs.rows() < 2) throw ConfigError("discrepancy extraction needs at least two rows");
  const Eigen::Index n = x_obs.rows() - 1;
  Eigen::MatrixXd z(n, m.K);
  const double inv_delta = 1.0 / m.delta;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = x_obs.row(i);
    const Eigen::VectorXd r = reduced_increment(m, xi);
    z.row(i) = (x_obs.row(i + 1) - x_obs.row(i)) * inv_delta - r.transpose();
  }
  return z;
}

}  // namespace dsparam
