#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>

#include "dsparam/series.hpp"

namespace dsparam {

// Baseline pointwise parametrization: the unresolved tendency is modelled
// as a fifth-degree polynomial in the local resolved value plus an AR(1)
// residual,
//   z_k(t) = P(x_k(t)) + eta_k(t),   eta_k(t + delta) = phi eta_k(t) + sigma xi.
struct PolyarParams {
  Eigen::VectorXd poly;  // degree + 1 entries, poly[i] multiplies x^i
  double phi = 0.0;
  double sigma = 0.0;
  double delta = 0.0;

  void validate() const;  // finite coefficients, |phi| < 1 not required but sigma >= 0
};

// Forward-difference estimate of the unresolved tendency,
//   z_k(t) = (x_k(t+delta) - x_k(t)) / delta
//            - x_{k-1}(t) (x_{k+1}(t) - x_{k-2}(t)) + x_k(t) - F,
// one row per t = 0..N-2 (row i pairs with x_obs row i).
// This equals extract_discrepancy with the Euler one-step scheme.
Eigen::MatrixXd estimate_z_fd(double F, const Eigen::MatrixXd& x_obs, double delta);

// Pooled least-squares polynomial fit z ~ P(x) over all components and
// times. x and z must have identical shapes. Returns degree + 1
// coefficients, constant term first.
Eigen::VectorXd fit_poly(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z, int degree);

// Evaluate P at x (Horner).
double eval_poly(const Eigen::VectorXd& poly, double x);

// Pooled AR(1) fit over residual columns: least-squares phi (no intercept)
// and innovation standard deviation sigma. Throws DegenerateDataError when
// the residuals carry no variance.
std::pair<double, double> fit_ar1(const Eigen::MatrixXd& residuals);

// Full baseline fit: forward-difference tendency, polynomial regression,
// AR(1) on what the polynomial leaves over.
PolyarParams fit_polyar(double F, const Eigen::MatrixXd& x_obs, double delta, int degree = 5);

// Simulates the baseline closed loop from state (x0, eta0): per step the
// AR(1) noise advances first, then x integrates one RK4 step of
//   dx_k/dt = x_{k-1}(x_{k+1} - x_{k-2}) - x_k + F + P(x_k) + eta_k
// with eta held fixed during the step. Returns x0 followed by n_steps
// generated rows; z/xi are not populated.
// Throws BlowUpError past the blow-up threshold.
SeriesSet simulate_polyar(const PolyarParams& params, double F, const Eigen::VectorXd& x0,
                          const Eigen::VectorXd& eta0, long n_steps, std::uint64_t seed);

}  // namespace dsparam
