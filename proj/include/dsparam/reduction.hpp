#pragma once

#include <Eigen/Dense>

namespace dsparam {

// One-step integrator used to build the reduced increment map.
enum class OneStepScheme { Euler, Rk2, Rk4 };

// Deterministic one-step map of the truncated (resolved-only) field
//   f_k(x) = x_{k-1} (x_{k+1} - x_{k-2}) - x_k + F
// at sampling interval delta. R_delta(x) = (step(x, delta) - x) / delta is
// the average tendency the scheme assigns to one interval.
struct ReducedMap {
  int K = 18;
  double F = 10.0;
  double delta = 0.05;
  OneStepScheme scheme = OneStepScheme::Rk4;

  void validate() const;  // throws ConfigError (K >= 4, delta > 0)
};

// Truncated single-scale field; cyclic in k.
void truncated_rhs(double F, const Eigen::VectorXd& x, Eigen::VectorXd& out);
Eigen::VectorXd truncated_rhs(double F, const Eigen::VectorXd& x);

// R_delta(x): one-step increment of the truncated field under m.scheme.
// For the Euler scheme this is exactly the field itself.
Eigen::VectorXd reduced_increment(const ReducedMap& m, const Eigen::VectorXd& x);

// x + delta * R_delta(x), the deterministic part of the reduced update.
Eigen::VectorXd reduced_step(const ReducedMap& m, const Eigen::VectorXd& x);

// Discrete unresolved tendency of an observed trajectory:
//   z^{n+1} = (x^{n+1} - x^n) / delta - R_delta(x^n),  n = 0..N-2.
// Row i of the result is z at step i+1. By construction the observed data
// satisfy x^{n+1} = x^n + delta (R_delta(x^n) + z^{n+1}) identically; no
// derivative approximation is involved.
// Preconditions: x_obs has >= 2 rows and K columns matching m.
Eigen::MatrixXd extract_discrepancy(const ReducedMap& m, const Eigen::MatrixXd& x_obs);

}  // namespace dsparam
