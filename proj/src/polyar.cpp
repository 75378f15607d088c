#include "dsparam/polyar.hpp"

#include <cmath>

#include "dsparam/errors.hpp"
#include "dsparam/lorenz96.hpp"
#include "dsparam/optimizer.hpp"
#include "dsparam/reduction.hpp"
#include "dsparam/rng.hpp"

namespace dsparam {

void PolyarParams::validate() const {
  if (poly.size() < 1) throw ConfigError("polyar params: empty polynomial");
  if (!poly.allFinite() || !std::isfinite(phi) || !std::isfinite(sigma))
    throw ConfigError("polyar params: coefficients must be finite");
  if (sigma < 0.0) throw ConfigError("polyar params: sigma must be >= 0");
  if (!(delta > 0.0)) throw ConfigError("polyar params: delta must be > 0");
}

Eigen::MatrixXd estimate_z_fd(double F, const Eigen::MatrixXd& x_obs, double delta) {
  if (!(delta > 0.0)) throw ConfigError("polyar: delta must be > 0");
  if (x_obs.rows() < 2) throw ConfigError("polyar: need at least two observations");
  if (x_obs.cols() < 4) throw ConfigError("polyar: need at least four components");
  const Eigen::Index n = x_obs.rows() - 1;
  const Eigen::Index k_comps = x_obs.cols();
  Eigen::MatrixXd z(n, k_comps);
  const double inv_delta = 1.0 / delta;
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index k = 0; k < k_comps; ++k) {
      const double xm1 = x_obs(t, (k + k_comps - 1) % k_comps);
      const double xp1 = x_obs(t, (k + 1) % k_comps);
      const double xm2 = x_obs(t, (k + k_comps - 2) % k_comps);
      z(t, k) = (x_obs(t + 1, k) - x_obs(t, k)) * inv_delta - xm1 * (xp1 - xm2) + x_obs(t, k) - F;
    }
  }
  return z;
}

Eigen::VectorXd fit_poly(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z, int degree) {
  if (degree < 0) throw ConfigError("polyar: polynomial degree must be >= 0");
  if (x.rows() != z.rows() || x.cols() != z.cols())
    throw ConfigError("polyar: x and z must have identical shapes");
  const int m = degree + 1;
  if (x.size() < m) throw ConfigError("polyar: not enough samples for the polynomial degree");
  LeastSquaresAccumulator acc(m);
  Eigen::VectorXd row(m);
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      double pw = 1.0;
      for (int l = 0; l < m; ++l) {
        row[l] = pw;
        pw *= x(t, k);
      }
      acc.add_row(row, z(t, k));
    }
  }
  return acc.solve();
}

double eval_poly(const Eigen::VectorXd& poly, double x) {
  double v = 0.0;
  for (Eigen::Index i = poly.size() - 1; i >= 0; --i) v = v * x + poly[i];
  return v;
}

std::pair<double, double> fit_ar1(const Eigen::MatrixXd& residuals) {
  if (residuals.rows() < 2) throw ConfigError("polyar: AR(1) fit needs at least two rows");
  // Pooled least squares for eta_{t+1} = phi eta_t: phi = <eta_t eta_{t+1}> / <eta_t^2>.
  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index k = 0; k < residuals.cols(); ++k) {
    for (Eigen::Index t = 0; t + 1 < residuals.rows(); ++t) {
      num += residuals(t, k) * residuals(t + 1, k);
      den += residuals(t, k) * residuals(t, k);
    }
  }
  if (den <= 0.0) throw DegenerateDataError("polyar: residuals carry no variance");
  const double phi = num / den;
  double ss = 0.0;
  long n = 0;
  for (Eigen::Index k = 0; k < residuals.cols(); ++k) {
    for (Eigen::Index t = 0; t + 1 < residuals.rows(); ++t) {
      const double e = residuals(t + 1, k) - phi * residuals(t, k);
      ss += e * e;
      ++n;
    }
  }
  return {phi, std::sqrt(ss / static_cast<double>(n))};
}

PolyarParams fit_polyar(double F, const Eigen::MatrixXd& x_obs, double delta, int degree) {
  const Eigen::MatrixXd z = estimate_z_fd(F, x_obs, delta);
  const Eigen::MatrixXd x_paired = x_obs.topRows(x_obs.rows() - 1);
  PolyarParams params;
  params.poly = fit_poly(x_paired, z, degree);
  Eigen::MatrixXd eta(z.rows(), z.cols());
  for (Eigen::Index k = 0; k < z.cols(); ++k)
    for (Eigen::Index t = 0; t < z.rows(); ++t)
      eta(t, k) = z(t, k) - eval_poly(params.poly, x_paired(t, k));
  const auto [phi, sigma] = fit_ar1(eta);
  params.phi = phi;
  params.sigma = sigma;
  params.delta = delta;
  return params;
}

SeriesSet simulate_polyar(const PolyarParams& params, double F, const Eigen::VectorXd& x0,
                          const Eigen::VectorXd& eta0, long n_steps, std::uint64_t seed) {
  params.validate();
  if (x0.size() < 4) throw ConfigError("polyar simulate: need at least four components");
  if (eta0.size() != x0.size()) throw ConfigError("polyar simulate: eta0 must match x0");
  if (n_steps < 0) throw ConfigError("polyar simulate: n_steps must be >= 0");

  const Eigen::Index k_comps = x0.size();
  SeriesSet out;
  out.delta = params.delta;
  out.x_obs.resize(n_steps + 1, k_comps);
  out.x_obs.row(0) = x0;

  GaussianRng rng(seed);
  Rk4Stepper stepper(k_comps);
  Eigen::VectorXd eta = eta0;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd field(k_comps);
  // Per step the AR(1) residual advances first; the freshly drawn value is
  // held fixed while x integrates one RK4 step of the augmented field.
  auto rhs = [&](const Eigen::VectorXd& v, Eigen::VectorXd& dv) {
    truncated_rhs(F, v, dv);
    for (Eigen::Index k = 0; k < v.size(); ++k) dv[k] += eval_poly(params.poly, v[k]) + eta[k];
  };
  for (long n = 0; n < n_steps; ++n) {
    for (Eigen::Index k = 0; k < k_comps; ++k)
      eta[k] = params.phi * eta[k] + params.sigma * rng.normal();
    stepper.step(rhs, x, params.delta);
    for (Eigen::Index k = 0; k < k_comps; ++k) {
      if (!std::isfinite(x[k]) || std::abs(x[k]) > kBlowUpThreshold)
        throw BlowUpError("polyar simulation blow-up", n);
    }
    out.x_obs.row(n + 1) = x;
  }
  return out;
}

}  // namespace dsparam
