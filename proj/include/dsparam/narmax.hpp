#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsparam/reduction.hpp"
#include "dsparam/series.hpp"

namespace dsparam {

// Model orders of the discrete stochastic parametrization
//   Phi^n = mu + sum_j a_j z^{n-j} + sum_{j,l} b_{j,l} (x^{n-j})^l
//             + sum_{j,l} c_{j,l} (R_delta(x^{n-j}))^l + sum_j d_j xi^{n-j}
//   z^{n+1} = Phi^{n+1} + xi^{n+1},   xi ~ N(0, sigma2) iid.
// One scalar model is shared by all K components (the dynamics are
// translation-equivariant), with sums pooled over components.
struct NarmaxStructure {
  int p = 0;    // autoregressive lags of z
  int r = 0;    // lags of x entering polynomially
  int d_x = 0;  // highest power of x
  int s = 0;    // lags of R_delta(x) entering polynomially
  int d_R = 0;  // highest power of R_delta(x)
  int q = 0;    // moving-average lags of xi

  // Throws ConfigError if any order is negative or a lag/degree pair is
  // inconsistent (r > 0 xor d_x > 0, and likewise for s, d_R).
  void validate() const;

  // Packed coefficient count: mu, a_1..a_p, b_{j,l}, c_{j,l}, d_1..d_q.
  int num_coeffs() const { return 1 + p + r * d_x + s * d_R + q; }

  // Observation steps a forecast needs before the first prediction.
  int init_steps() const;

  // Labels of the packed coefficients, in packing order (mu, a_1, ...,
  // b_1_1, ..., c_1_1, ..., d_1, ...). Used in diagnostics.
  std::vector<std::string> coeff_labels() const;
};

struct NarmaxParams {
  double mu = 0.0;
  Eigen::VectorXd a;  // p entries
  Eigen::MatrixXd b;  // r x d_x, b(j-1, l-1) multiplies (x^{n-j})^l
  Eigen::MatrixXd c;  // s x d_R, c(j-1, l-1) multiplies (R_delta(x^{n-j}))^l
  Eigen::VectorXd d;  // q entries
  double sigma2 = 1.0;

  // Dimension consistency with st; sigma2 must be finite and >= 0.
  void validate(const NarmaxStructure& st) const;

  // Pack/unpack all coefficients except sigma2 in the canonical order.
  Eigen::VectorXd coeff_vector() const;
  static NarmaxParams from_coeffs(const NarmaxStructure& st, const Eigen::VectorXd& coeffs,
                                  double sigma2);
};

// Lagged values feeding one evaluation of Phi, most recent first:
// z_lags[0] = z^{n-1}, x_lags[0] = x^{n-1}, r_lags[0] = R_delta(x^{n-1}),
// xi_lags[0] = xi^{n-1}. Sizes must be p, r, s, q.
struct PhiHistory {
  std::span<const double> z_lags;
  std::span<const double> x_lags;
  std::span<const double> r_lags;
  std::span<const double> xi_lags;
};

// One evaluation of the conditional mean Phi^n for a single component.
double phi(const NarmaxStructure& st, const NarmaxParams& params, const PhiHistory& hist);

// True when every root of the moving-average polynomial 1 + sum d_j w^j
// lies on or outside the unit circle, i.e. the residual recursion that
// reconstructs xi from observed z is stable. Trailing zero lags are
// ignored; an empty d is trivially invertible.
bool ma_polynomial_invertible(const Eigen::VectorXd& d);

// Residuals xi of an observed series under the model, same layout as
// series.z (row i is step i+1). Values are computed recursively from the
// first step at which every lag exists; earlier rows (which include the
// first q steps) are fixed at zero.
// Preconditions: series.z present, dimensions consistent, map matches
// series.delta. Throws ConfigError otherwise.
Eigen::MatrixXd residuals(const NarmaxStructure& st, const NarmaxParams& params,
                          const SeriesSet& series, const ReducedMap& map);

struct LogLikelihood {
  double value = 0.0;
  Eigen::VectorXd grad_coeffs;  // d/d(mu, a, b, c, d), packed order
  double grad_sigma2 = 0.0;
  long terms = 0;  // (step, component) pairs entering the sum
};

// Conditional Gaussian log-likelihood
//   l = -sum |xi|^2 / (2 sigma2) - (M/2) log sigma2
// over the M recursively computable residuals, with exact analytic
// gradient (forward accumulation through the xi recursion for q >= 1).
// Throws NumericalError if params.sigma2 <= 0.
LogLikelihood log_likelihood(const NarmaxStructure& st, const NarmaxParams& params,
                             const SeriesSet& series, const ReducedMap& map);

struct FitOptions {
  double grad_tol = 1e-6;
  int max_iters = 500;
  bool pool_components = true;               // false: fit on component 0 only
  std::optional<NarmaxParams> initial;       // default: zeros, a_1 = 0.5, mu = mean(z)
};

struct FitReport {
  NarmaxParams params;
  double loglik = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool ma_invertible = true;  // all roots of 1 + sum d_j w^j outside the unit disk
  std::string warning;        // empty when clean
};

// Maximum-likelihood fit. sigma2 is profiled out analytically (its
// conditional maximizer is the mean squared residual), so the quasi-Newton
// search runs over the packed coefficients only; for q = 0 the problem is
// an ordinary least-squares regression and the optimizer's exact-on-
// quadratics line search terminates finitely on it.
// Throws RankDeficiencyError (naming the collinear regressors) when the
// static regressor matrix is numerically rank-deficient, ConfigError on
// inconsistent inputs.
FitReport fit(const NarmaxStructure& st, const SeriesSet& series, const ReducedMap& map,
              const FitOptions& opts = {});

// Simulates the closed-loop reduced model
//   x^{n+1} = x^n + delta (R_delta(x^n) + z^{n+1})
// for n_steps steps past an initial window of observations. The window
// (>= init_steps() rows) seeds the lag state: z and xi over the window are
// derived with the same zero-initialized recursion used by residuals(), so
// simulation and residual extraction are exact inverses on shared data.
// The returned series contains the window followed by the generated steps,
// with z and xi populated. sigma2 = 0 is accepted and yields the
// deterministic (noise-free) model.
// Throws BlowUpError if the trajectory exceeds the blow-up threshold.
SeriesSet simulate(const NarmaxStructure& st, const NarmaxParams& params, const ReducedMap& map,
                   const Eigen::MatrixXd& init_window, long n_steps, std::uint64_t seed);

// Coefficient stability across nested prefixes of the data. For each
// fraction f the model is refit on the first ceil(f * N) observations;
// per-coefficient convergence compares the last two fits.
struct ConvergenceDiagnostic {
  std::vector<double> fractions;
  Eigen::MatrixXd coeff_paths;        // one row per fraction, packed order
  std::vector<double> sigma2_path;
  std::vector<bool> coeff_converged;  // relative change of last two fits < 5%
  bool converged = false;             // all coefficients
};

ConvergenceDiagnostic convergence_diagnostic(const NarmaxStructure& st, const SeriesSet& series,
                                             const ReducedMap& map,
                                             const std::vector<double>& fractions,
                                             const FitOptions& opts = {});

}  // namespace dsparam
