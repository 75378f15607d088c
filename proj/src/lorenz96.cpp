#include "dsparam/lorenz96.hpp"

#include <cmath>

#include "dsparam/errors.hpp"
#include "dsparam/rng.hpp"

namespace dsparam {

void L96Config::validate() const {
  if (K < 4) throw ConfigError("model.K must be >= 4 (advection needs k-2..k+1 distinct)");
  if (J < 1) throw ConfigError("model.J must be >= 1");
  if (!(eps > 0.0)) throw ConfigError("model.eps must be > 0");
  if (!(dt > 0.0)) throw ConfigError("model.dt must be > 0");
  if (spinup < 0.0) throw ConfigError("model.spinup must be >= 0");
  if (!std::isfinite(F) || !std::isfinite(h_x) || !std::isfinite(h_y))
    throw ConfigError("model.F, model.h_x, model.h_y must be finite");
}

Eigen::VectorXd pack_state(const FullState& s) {
  const Eigen::Index K = s.x.size();
  const Eigen::Index JK = s.y.size();
  Eigen::VectorXd v(K + JK);
  v.head(K) = s.x;
  v.tail(JK) = Eigen::Map<const Eigen::VectorXd>(s.y.data(), JK);
  return v;
}

FullState unpack_state(const L96Config& cfg, const Eigen::VectorXd& v) {
  const Eigen::Index K = cfg.K;
  const Eigen::Index JK = static_cast<Eigen::Index>(cfg.J) * cfg.K;
  if (v.size() != K + JK) throw ConfigError("packed state has wrong dimension");
  FullState s;
  s.x = v.head(K);
  s.y = Eigen::Map<const Eigen::MatrixXd>(v.data() + K, cfg.J, cfg.K);
  return s;
}

Lorenz96System::Lorenz96System(const L96Config& cfg) : cfg_(cfg) { cfg_.validate(); }

void Lorenz96System::rhs(const Eigen::VectorXd& state, Eigen::VectorXd& out) const {
  const int K = cfg_.K;
  const int J = cfg_.J;
  const Eigen::Index JK = static_cast<Eigen::Index>(J) * K;
  if (state.size() != K + JK) throw ConfigError("state has wrong dimension");
  out.resize(K + JK);

  const double* x = state.data();
  const double* y = state.data() + K;  // flat ring: y[k*J + j] = y_{j+1, k+1}
  double* dx = out.data();
  double* dy = out.data() + K;

  // Resolved scale: advection of x plus the aggregate fast feedback.
  const double couple = cfg_.h_x / J;
  for (int k = 0; k < K; ++k) {
    const double xm1 = x[(k + K - 1) % K];
    const double xp1 = x[(k + 1) % K];
    const double xm2 = x[(k + K - 2) % K];
    double ysum = 0.0;
    const double* yk = y + static_cast<std::size_t>(k) * J;
    for (int j = 0; j < J; ++j) ysum += yk[j];
    dx[k] = xm1 * (xp1 - xm2) - x[k] + cfg_.F + couple * ysum;
  }

  // Fast scale: in the flat ordering the coupling across k (y_{j+J,k} =
  // y_{j,k+1}) is ordinary index continuity, so one cyclic ring suffices.
  const double inv_eps = 1.0 / cfg_.eps;
  for (Eigen::Index m = 0; m < JK; ++m) {
    const double ym1 = y[(m + JK - 1) % JK];
    const double yp1 = y[(m + 1) % JK];
    const double yp2 = y[(m + 2) % JK];
    const double xk = x[m / J];
    dy[m] = inv_eps * (yp1 * (ym1 - yp2) - y[m] + cfg_.h_y * xk);
  }
}

FullState full_rhs(const L96Config& cfg, const FullState& s) {
  if (s.x.size() != cfg.K || s.y.rows() != cfg.J || s.y.cols() != cfg.K)
    throw ConfigError("state dimensions do not match the configuration");
  Lorenz96System sys(cfg);
  Eigen::VectorXd out;
  sys.rhs(pack_state(s), out);
  return unpack_state(cfg, out);
}

Eigen::VectorXd Lorenz96System::initial_state(std::uint64_t seed) const {
  GaussianRng rng(seed);
  Eigen::VectorXd v(dim());
  const double half_f = 0.5 * cfg_.F;
  for (int k = 0; k < cfg_.K; ++k) v[k] = half_f * (2.0 * rng.uniform() - 1.0);
  for (Eigen::Index m = cfg_.K; m < dim(); ++m) v[m] = 0.1 * (2.0 * rng.uniform() - 1.0);
  return v;
}

Eigen::VectorXd rk4_step(const RhsFn& rhs, const Eigen::VectorXd& s, double dt) {
  if (dt < 0.0) throw ConfigError("rk4_step requires dt >= 0");
  if (dt == 0.0) return s;
  Eigen::VectorXd out = s;
  Rk4Stepper stepper(s.size());
  stepper.step([&rhs](const Eigen::VectorXd& v, Eigen::VectorXd& dv) { rhs(v, dv); }, out, dt);
  return out;
}

namespace {

void check_finite_bounded(const Eigen::VectorXd& v, long step) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = v[i];
    if (!std::isfinite(a) || std::abs(a) > kBlowUpThreshold)
      throw BlowUpError("trajectory blow-up: |state| exceeded threshold", step);
  }
}

// Number of dt steps per observation interval; rejects non-integer ratios.
long steps_per_interval(double interval, double dt, const char* what) {
  const double ratio = interval / dt;
  const long n = std::lround(ratio);
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-6)
    throw ConfigError(std::string(what) + " must be a positive integer multiple of model.dt");
  return n;
}

}  // namespace

SeriesSet generate_dataset(const L96Config& cfg, double T, double delta) {
  cfg.validate();
  if (!(delta > 0.0)) throw ConfigError("delta must be > 0");
  if (T < cfg.spinup) throw ConfigError("total time must cover the spinup interval");
  const long obs_stride = steps_per_interval(delta, cfg.dt, "delta");
  const long spinup_steps = std::lround(cfg.spinup / cfg.dt);
  const long n_obs = static_cast<long>(std::floor((T - cfg.spinup) / delta + 1e-9)) + 1;

  Lorenz96System sys(cfg);
  Rk4Stepper stepper(sys.dim());
  auto rhs = [&sys](const Eigen::VectorXd& v, Eigen::VectorXd& dv) { sys.rhs(v, dv); };

  Eigen::VectorXd state = sys.initial_state(cfg.seed);
  long step = 0;
  for (long i = 0; i < spinup_steps; ++i, ++step) {
    stepper.step(rhs, state, cfg.dt);
    check_finite_bounded(state, step);
  }

  SeriesSet out;
  out.delta = delta;
  out.x_obs.resize(n_obs, cfg.K);
  out.x_obs.row(0) = state.head(cfg.K);
  for (long i = 1; i < n_obs; ++i) {
    for (long j = 0; j < obs_stride; ++j, ++step) {
      stepper.step(rhs, state, cfg.dt);
      check_finite_bounded(state, step);
    }
    out.x_obs.row(i) = state.head(cfg.K);
  }
  return out;
}

}  // namespace dsparam
