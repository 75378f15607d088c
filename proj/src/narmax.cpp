#include "dsparam/narmax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dsparam/errors.hpp"
#include "dsparam/lorenz96.hpp"
#include "dsparam/optimizer.hpp"
#include "dsparam/rng.hpp"

namespace dsparam {

void NarmaxStructure::validate() const {
  if (p < 0 || r < 0 || s < 0 || q < 0 || d_x < 0 || d_R < 0)
    throw ConfigError("narmax: all orders must be >= 0");
  if ((r > 0) != (d_x > 0))
    throw ConfigError("narmax: r and d_x must be both zero or both positive");
  if ((s > 0) != (d_R > 0))
    throw ConfigError("narmax: s and d_R must be both zero or both positive");
}

int NarmaxStructure::init_steps() const {
  // Enough observations to cover every lag, with 2q steps so the residual
  // recursion can warm the xi state before the first forecast.
  return std::max({1, p, r, s, 2 * q}) + 1;
}

std::vector<std::string> NarmaxStructure::coeff_labels() const {
  std::vector<std::string> labels;
  labels.reserve(num_coeffs());
  labels.emplace_back("mu");
  for (int j = 1; j <= p; ++j) labels.push_back("a_" + std::to_string(j));
  for (int j = 1; j <= r; ++j)
    for (int l = 1; l <= d_x; ++l)
      labels.push_back("b_" + std::to_string(j) + "_" + std::to_string(l));
  for (int j = 1; j <= s; ++j)
    for (int l = 1; l <= d_R; ++l)
      labels.push_back("c_" + std::to_string(j) + "_" + std::to_string(l));
  for (int j = 1; j <= q; ++j) labels.push_back("d_" + std::to_string(j));
  return labels;
}

void NarmaxParams::validate(const NarmaxStructure& st) const {
  st.validate();
  auto block_ok = [](const Eigen::MatrixXd& mat, int rows, int cols) {
    if (rows == 0 || cols == 0) return mat.size() == 0;
    return mat.rows() == rows && mat.cols() == cols;
  };
  if (a.size() != st.p) throw ConfigError("narmax params: a must have p entries");
  if (!block_ok(b, st.r, st.d_x)) throw ConfigError("narmax params: b must be r x d_x");
  if (!block_ok(c, st.s, st.d_R)) throw ConfigError("narmax params: c must be s x d_R");
  if (d.size() != st.q) throw ConfigError("narmax params: d must have q entries");
  if (!std::isfinite(mu) || !a.allFinite() || !b.allFinite() || !c.allFinite() || !d.allFinite())
    throw ConfigError("narmax params: coefficients must be finite");
  if (!std::isfinite(sigma2) || sigma2 < 0.0)
    throw ConfigError("narmax params: sigma2 must be finite and >= 0");
}

Eigen::VectorXd NarmaxParams::coeff_vector() const {
  Eigen::VectorXd v(1 + a.size() + b.size() + c.size() + d.size());
  Eigen::Index idx = 0;
  v[idx++] = mu;
  for (Eigen::Index j = 0; j < a.size(); ++j) v[idx++] = a[j];
  for (Eigen::Index j = 0; j < b.rows(); ++j)
    for (Eigen::Index l = 0; l < b.cols(); ++l) v[idx++] = b(j, l);
  for (Eigen::Index j = 0; j < c.rows(); ++j)
    for (Eigen::Index l = 0; l < c.cols(); ++l) v[idx++] = c(j, l);
  for (Eigen::Index j = 0; j < d.size(); ++j) v[idx++] = d[j];
  return v;
}

NarmaxParams NarmaxParams::from_coeffs(const NarmaxStructure& st, const Eigen::VectorXd& coeffs,
                                       double sigma2) {
  st.validate();
  if (coeffs.size() != st.num_coeffs())
    throw ConfigError("narmax params: coefficient vector has wrong length");
  NarmaxParams out;
  Eigen::Index idx = 0;
  out.mu = coeffs[idx++];
  out.a.resize(st.p);
  for (int j = 0; j < st.p; ++j) out.a[j] = coeffs[idx++];
  out.b.resize(st.r > 0 ? st.r : 0, st.r > 0 ? st.d_x : 0);
  for (int j = 0; j < st.r; ++j)
    for (int l = 0; l < st.d_x; ++l) out.b(j, l) = coeffs[idx++];
  out.c.resize(st.s > 0 ? st.s : 0, st.s > 0 ? st.d_R : 0);
  for (int j = 0; j < st.s; ++j)
    for (int l = 0; l < st.d_R; ++l) out.c(j, l) = coeffs[idx++];
  out.d.resize(st.q);
  for (int j = 0; j < st.q; ++j) out.d[j] = coeffs[idx++];
  out.sigma2 = sigma2;
  return out;
}

double phi(const NarmaxStructure& st, const NarmaxParams& params, const PhiHistory& hist) {
  st.validate();
  params.validate(st);
  if (static_cast<int>(hist.z_lags.size()) != st.p ||
      static_cast<int>(hist.x_lags.size()) != st.r ||
      static_cast<int>(hist.r_lags.size()) != st.s ||
      static_cast<int>(hist.xi_lags.size()) != st.q)
    throw ConfigError("narmax phi: history spans must have sizes p, r, s, q");
  double v = params.mu;
  for (int j = 0; j < st.p; ++j) v += params.a[j] * hist.z_lags[j];
  for (int j = 0; j < st.r; ++j) {
    double pw = 1.0;
    for (int l = 0; l < st.d_x; ++l) {
      pw *= hist.x_lags[j];
      v += params.b(j, l) * pw;
    }
  }
  for (int j = 0; j < st.s; ++j) {
    double pw = 1.0;
    for (int l = 0; l < st.d_R; ++l) {
      pw *= hist.r_lags[j];
      v += params.c(j, l) * pw;
    }
  }
  for (int j = 0; j < st.q; ++j) v += params.d[j] * hist.xi_lags[j];
  return v;
}

namespace {

// Borrowed view over the arrays a residual pass reads. Row i of z (and of
// xi) is the value at step i+1; rinc row t is R_delta at observation t.
struct DataView {
  const Eigen::MatrixXd* x = nullptr;
  const Eigen::MatrixXd* z = nullptr;
  const Eigen::MatrixXd* rinc = nullptr;  // required when s > 0
  long first_row = 0;                     // first z-row with full lag coverage
  long n_rows = 0;
};

// First z-row at which every lagged term exists: z needs p earlier rows,
// xi needs q, and the x / R lags reach back r-1 / s-1 observations.
long first_usable_row(const NarmaxStructure& st) {
  return std::max({static_cast<long>(st.p), static_cast<long>(st.q),
                   static_cast<long>(st.r) - 1, static_cast<long>(st.s) - 1, 0L});
}

void check_series(const NarmaxStructure& st, const SeriesSet& series, const ReducedMap& map) {
  st.validate();
  map.validate();
  if (!series.z) throw ConfigError("narmax: series must carry the extracted tendency z");
  if (series.x_obs.cols() != map.K)
    throw ConfigError("narmax: series component count does not match the reduced map");
  if (std::abs(series.delta - map.delta) > 1e-9 * std::max(std::abs(map.delta), 1.0))
    throw ConfigError("narmax: series sampling interval does not match the reduced map");
  if (series.z->rows() != series.x_obs.rows() - 1 || series.z->cols() != series.x_obs.cols())
    throw ConfigError("narmax: z must have one fewer row than x and the same columns");
}

Eigen::MatrixXd make_rinc(const NarmaxStructure& st, const Eigen::MatrixXd& x_obs,
                          const ReducedMap& map) {
  if (st.s == 0) return {};
  const Eigen::Index n = x_obs.rows() - 1;
  Eigen::MatrixXd rinc(n, x_obs.cols());
  for (Eigen::Index t = 0; t < n; ++t)
    rinc.row(t) = reduced_increment(map, Eigen::VectorXd(x_obs.row(t)));
  return rinc;
}

// Packed regressor vector at z-row i, component k: the partial derivatives
// of Phi with respect to (mu, a, b, c, d) holding past xi values fixed.
inline void build_regressors(const NarmaxStructure& st, const DataView& v,
                             const Eigen::MatrixXd& xi, long i, int k, double* reg) {
  int idx = 0;
  reg[idx++] = 1.0;
  for (int j = 1; j <= st.p; ++j) reg[idx++] = (*v.z)(i - j, k);
  for (int j = 1; j <= st.r; ++j) {
    const double xv = (*v.x)(i + 1 - j, k);
    double pw = 1.0;
    for (int l = 0; l < st.d_x; ++l) {
      pw *= xv;
      reg[idx++] = pw;
    }
  }
  for (int j = 1; j <= st.s; ++j) {
    const double rv = (*v.rinc)(i + 1 - j, k);
    double pw = 1.0;
    for (int l = 0; l < st.d_R; ++l) {
      pw *= rv;
      reg[idx++] = pw;
    }
  }
  for (int j = 1; j <= st.q; ++j) reg[idx++] = xi(i - j, k);
}

struct PassResult {
  double ssr = 0.0;
  long terms = 0;
};

// Residual recursion over all usable rows, optionally with the exact
// gradient accumulator sum_t xi_t * (d xi_t / d theta). The xi matrix must
// be zero on rows < first_row; it is filled in place. Sensitivities of
// lagged xi propagate through the moving-average terms by forward
// accumulation (a ring of the last q sensitivity vectors per component).
PassResult residual_pass(const NarmaxStructure& st, const Eigen::VectorXd& coeffs,
                         const DataView& v, bool pooled, Eigen::MatrixXd& xi,
                         Eigen::VectorXd* grad_acc) {
  const int m = st.num_coeffs();
  const int q = st.q;
  const int n_comps = pooled ? static_cast<int>(v.z->cols()) : 1;
  const double* dcoef = coeffs.data() + (m - q);  // moving-average block

  Eigen::VectorXd reg(m);
  Eigen::MatrixXd sens_ring;   // column j % q: d xi_j / d theta
  Eigen::VectorXd sens(m);
  if (grad_acc) {
    grad_acc->setZero();
    if (q > 0) sens_ring.resize(m, q);
  }

  PassResult out;
  for (int k = 0; k < n_comps; ++k) {
    if (grad_acc && q > 0) sens_ring.setZero();
    for (long i = v.first_row; i < v.n_rows; ++i) {
      build_regressors(st, v, xi, i, k, reg.data());
      const double phi_val = coeffs.dot(reg);
      const double e = (*v.z)(i, k) - phi_val;
      xi(i, k) = e;
      out.ssr += e * e;
      if (grad_acc) {
        sens = -reg;
        for (int j = 1; j <= q; ++j) {
          // Sensitivities of rows < first_row are zero (those xi are the
          // fixed initialization), matching the untouched ring columns.
          if (i - j >= v.first_row) sens -= dcoef[j - 1] * sens_ring.col((i - j) % q);
        }
        *grad_acc += e * sens;
        if (q > 0) sens_ring.col(i % q) = sens;
      }
    }
    out.terms += v.n_rows - v.first_row;
  }
  return out;
}

}  // namespace

bool ma_polynomial_invertible(const Eigen::VectorXd& d) {
  int deg = static_cast<int>(d.size());
  while (deg > 0 && d[deg - 1] == 0.0) --deg;
  if (deg == 0) return true;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
  companion(0, deg - 1) = -1.0 / d[deg - 1];
  for (int i = 1; i < deg; ++i) companion(i, deg - 1) = -d[i - 1] / d[deg - 1];
  Eigen::EigenSolver<Eigen::MatrixXd> eig(companion, false);
  for (int i = 0; i < deg; ++i) {
    if (std::abs(eig.eigenvalues()[i]) < 1.0 - 1e-9) return false;
  }
  return true;
}

Eigen::MatrixXd residuals(const NarmaxStructure& st, const NarmaxParams& params,
                          const SeriesSet& series, const ReducedMap& map) {
  check_series(st, series, map);
  params.validate(st);
  const Eigen::MatrixXd rinc = make_rinc(st, series.x_obs, map);
  DataView v{&series.x_obs, &*series.z, &rinc, first_usable_row(st), series.z->rows()};
  if (v.first_row >= v.n_rows) throw ConfigError("narmax: series too short for the requested lags");

  Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(v.n_rows, series.z->cols());
  residual_pass(st, params.coeff_vector(), v, true, xi, nullptr);
  return xi;
}

LogLikelihood log_likelihood(const NarmaxStructure& st, const NarmaxParams& params,
                             const SeriesSet& series, const ReducedMap& map) {
  check_series(st, series, map);
  params.validate(st);
  if (params.sigma2 <= 0.0)
    throw NumericalError("narmax log-likelihood requires sigma2 > 0");
  const Eigen::MatrixXd rinc = make_rinc(st, series.x_obs, map);
  DataView v{&series.x_obs, &*series.z, &rinc, first_usable_row(st), series.z->rows()};
  if (v.first_row >= v.n_rows) throw ConfigError("narmax: series too short for the requested lags");

  Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(v.n_rows, series.z->cols());
  Eigen::VectorXd grad_acc(st.num_coeffs());
  const PassResult pass = residual_pass(st, params.coeff_vector(), v, true, xi, &grad_acc);

  LogLikelihood out;
  const double s2 = params.sigma2;
  out.terms = pass.terms;
  out.value = -pass.ssr / (2.0 * s2) - 0.5 * static_cast<double>(pass.terms) * std::log(s2);
  out.grad_coeffs = -grad_acc / s2;
  out.grad_sigma2 =
      pass.ssr / (2.0 * s2 * s2) - 0.5 * static_cast<double>(pass.terms) / s2;
  return out;
}

FitReport fit(const NarmaxStructure& st, const SeriesSet& series, const ReducedMap& map,
              const FitOptions& opts) {
  check_series(st, series, map);
  if (opts.grad_tol <= 0.0) throw ConfigError("narmax fit: grad_tol must be > 0");
  const Eigen::MatrixXd rinc = make_rinc(st, series.x_obs, map);
  DataView v{&series.x_obs, &*series.z, &rinc, first_usable_row(st), series.z->rows()};
  if (v.first_row >= v.n_rows) throw ConfigError("narmax: series too short for the requested lags");

  const int m = st.num_coeffs();
  const int m_static = m - st.q;
  const int n_comps = opts.pool_components ? static_cast<int>(series.z->cols()) : 1;
  const std::vector<std::string> labels = st.coeff_labels();

  // One pass over the static regressors: a rank check (the optimizer
  // cannot identify coefficients of collinear columns) and per-column
  // root-mean-square scales used to precondition the search.
  Eigen::MatrixXd xi_zero = Eigen::MatrixXd::Zero(v.n_rows, series.z->cols());
  LeastSquaresAccumulator rank_check(
      m_static, std::vector<std::string>(labels.begin(), labels.begin() + m_static));
  Eigen::VectorXd colsq = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd reg(m);
  double z_mean = 0.0;
  long used = 0;
  for (int k = 0; k < n_comps; ++k) {
    for (long i = v.first_row; i < v.n_rows; ++i) {
      build_regressors(st, v, xi_zero, i, k, reg.data());
      rank_check.add_row(reg.head(m_static), (*v.z)(i, k));
      colsq += reg.cwiseProduct(reg);
      z_mean += (*v.z)(i, k);
      ++used;
    }
  }
  if (used < m) throw ConfigError("narmax fit: not enough data for the requested structure");
  (void)rank_check.solve();  // throws RankDeficiencyError naming collinear terms
  z_mean /= static_cast<double>(used);

  Eigen::VectorXd scales(m);
  for (int i = 0; i < m; ++i)
    scales[i] = (i < m_static) ? std::max(std::sqrt(colsq[i] / used), 1e-12) : 1.0;

  Eigen::VectorXd theta0(m);
  if (opts.initial) {
    opts.initial->validate(st);
    theta0 = opts.initial->coeff_vector();
  } else {
    theta0.setZero();
    theta0[0] = z_mean;
    if (st.p >= 1) theta0[1] = 0.5;
  }

  // Profile likelihood: sigma2's conditional maximizer is ssr/M, so the
  // search runs over the coefficients only; by the envelope theorem the
  // profile gradient is the coefficient gradient evaluated at that sigma2.
  Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(v.n_rows, series.z->cols());
  Eigen::VectorXd grad_acc(m);
  long terms = 0;
  auto profile = [&](const Eigen::VectorXd& theta_scaled, Eigen::VectorXd& grad) -> double {
    const Eigen::VectorXd theta = theta_scaled.cwiseQuotient(scales);
    const PassResult pass = residual_pass(st, theta, v, opts.pool_components, xi, &grad_acc);
    terms = pass.terms;
    const double s2 = std::max(pass.ssr / static_cast<double>(pass.terms), 1e-300);
    grad = (-grad_acc / s2).cwiseQuotient(scales);
    return -0.5 * static_cast<double>(pass.terms) * (1.0 + std::log(s2));
  };

  OptProblem prob;
  prob.dim = m;
  prob.objective = profile;
  prob.grad_tol = opts.grad_tol;
  prob.max_iters = opts.max_iters;
  const OptResult res = bfgs_maximize(prob, theta0.cwiseProduct(scales));

  const Eigen::VectorXd theta_star = res.x.cwiseQuotient(scales);
  const PassResult final_pass = residual_pass(st, theta_star, v, opts.pool_components, xi, nullptr);
  const double sigma2 = final_pass.ssr / static_cast<double>(final_pass.terms);

  FitReport report;
  report.params = NarmaxParams::from_coeffs(st, theta_star, sigma2);
  report.loglik = -0.5 * static_cast<double>(final_pass.terms) * (1.0 + std::log(std::max(sigma2, 1e-300)));
  report.grad_norm = res.grad_norm;
  report.iterations = res.iterations;
  report.converged = res.converged;
  report.ma_invertible = ma_polynomial_invertible(report.params.d);
  if (!report.converged)
    report.warning = "optimizer did not reach the gradient tolerance";
  else if (!report.ma_invertible)
    report.warning = "moving-average polynomial has roots inside the unit disk";
  return report;
}

SeriesSet simulate(const NarmaxStructure& st, const NarmaxParams& params, const ReducedMap& map,
                   const Eigen::MatrixXd& init_window, long n_steps, std::uint64_t seed) {
  st.validate();
  params.validate(st);
  map.validate();
  const long w = init_window.rows();
  const int k_comps = map.K;
  if (init_window.cols() != k_comps)
    throw ConfigError("narmax simulate: window columns do not match the reduced map");
  if (w < st.init_steps())
    throw ConfigError("narmax simulate: window must have at least init_steps() rows");
  if (n_steps < 0) throw ConfigError("narmax simulate: n_steps must be >= 0");

  const long total = w + n_steps;
  Eigen::MatrixXd x(total, k_comps);
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(total - 1, k_comps);
  Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(total - 1, k_comps);
  Eigen::MatrixXd rinc(total - 1, k_comps);  // row t = R_delta at observation t

  x.topRows(w) = init_window;
  z.topRows(w - 1) = extract_discrepancy(map, init_window);
  for (long t = 0; t + 1 < w; ++t)
    rinc.row(t) = reduced_increment(map, Eigen::VectorXd(x.row(t)));

  // The window's xi are derived with the same zero-initialized recursion
  // residuals() uses, so simulation continues exactly where extraction on
  // the same data would. Rows the recursion cannot reach stay zero.
  DataView view{&x, &z, &rinc, first_usable_row(st), total - 1};
  const Eigen::VectorXd coeffs = params.coeff_vector();
  if (st.q > 0 && view.first_row < w - 1) {
    DataView window_view{&x, &z, &rinc, view.first_row, w - 1};
    residual_pass(st, coeffs, window_view, true, xi, nullptr);
  }

  GaussianRng rng(seed);
  const double sig = std::sqrt(params.sigma2);
  const int m = st.num_coeffs();
  Eigen::VectorXd reg(m);
  Eigen::VectorXd xcur = x.row(w - 1);
  Eigen::VectorXd xnext(k_comps);
  for (long n = 0; n < n_steps; ++n) {
    const long t = w - 1 + n;  // generating observation t+1
    rinc.row(t) = reduced_increment(map, xcur);
    for (int k = 0; k < k_comps; ++k) {
      build_regressors(st, view, xi, t, k, reg.data());
      const double phi_val = coeffs.dot(reg);
      const double noise = sig * rng.normal();
      xi(t, k) = noise;
      z(t, k) = phi_val + noise;
      xnext[k] = xcur[k] + map.delta * (rinc(t, k) + z(t, k));
    }
    for (int k = 0; k < k_comps; ++k) {
      if (!std::isfinite(xnext[k]) || std::abs(xnext[k]) > kBlowUpThreshold)
        throw BlowUpError("narmax simulation blow-up", n);
    }
    x.row(t + 1) = xnext;
    xcur = xnext;
  }

  SeriesSet out;
  out.delta = map.delta;
  out.x_obs = std::move(x);
  out.z = std::move(z);
  out.xi = std::move(xi);
  return out;
}

ConvergenceDiagnostic convergence_diagnostic(const NarmaxStructure& st, const SeriesSet& series,
                                             const ReducedMap& map,
                                             const std::vector<double>& fractions,
                                             const FitOptions& opts) {
  check_series(st, series, map);
  if (fractions.empty()) throw ConfigError("convergence diagnostic: no fractions given");
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] > 0.0) || fractions[i] > 1.0)
      throw ConfigError("convergence diagnostic: fractions must lie in (0, 1]");
    if (i > 0 && fractions[i] <= fractions[i - 1])
      throw ConfigError("convergence diagnostic: fractions must be strictly increasing");
  }

  const long n = series.x_obs.rows();
  const int m = st.num_coeffs();
  ConvergenceDiagnostic diag;
  diag.fractions = fractions;
  diag.coeff_paths.resize(static_cast<Eigen::Index>(fractions.size()), m);
  diag.sigma2_path.resize(fractions.size());
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const long rows = std::max<long>(2, static_cast<long>(std::ceil(fractions[i] * n)));
    SeriesSet prefix;
    prefix.delta = series.delta;
    prefix.x_obs = series.x_obs.topRows(rows);
    prefix.z = series.z->topRows(rows - 1);
    const FitReport rep = fit(st, prefix, map, opts);
    diag.coeff_paths.row(static_cast<Eigen::Index>(i)) = rep.params.coeff_vector();
    diag.sigma2_path[i] = rep.params.sigma2;
  }

  diag.coeff_converged.assign(m, true);
  diag.converged = true;
  if (fractions.size() >= 2) {
    const Eigen::Index last = diag.coeff_paths.rows() - 1;
    for (int i = 0; i < m; ++i) {
      const double u = diag.coeff_paths(last - 1, i);
      const double w = diag.coeff_paths(last, i);
      const double denom = std::max(std::abs(u), std::abs(w));
      const bool ok = denom < 1e-10 || std::abs(w - u) / denom < 0.05;
      diag.coeff_converged[i] = ok;
      diag.converged = diag.converged && ok;
    }
  }
  return diag;
}

}  // namespace dsparam
