#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "dsparam/errors.hpp"
#include "dsparam/lorenz96.hpp"
#include "dsparam/rng.hpp"

using namespace dsparam;

namespace {

L96Config tiny_config() {
  L96Config cfg;
  cfg.K = 6;
  cfg.J = 4;
  cfg.F = 8.0;
  cfg.eps = 0.5;
  cfg.dt = 0.005;
  cfg.spinup = 2.0;
  cfg.seed = 11;
  return cfg;
}

// Index-naive reimplementation of the two-scale field, written directly
// from the cyclic rules x_{k+K} = x_k, y_{j,k+K} = y_{j,k},
// y_{j+J,k} = y_{j,k+1}, as an independent oracle for the library version.
FullState naive_rhs(const L96Config& cfg, const FullState& s) {
  const int K = cfg.K;
  const int J = cfg.J;
  auto X = [&](int k) { return s.x(((k % K) + K) % K); };
  auto Y = [&](int j, int k) {
    while (j >= J) {
      j -= J;
      ++k;
    }
    while (j < 0) {
      j += J;
      --k;
    }
    return s.y(j, ((k % K) + K) % K);
  };
  FullState out;
  out.x.resize(K);
  out.y.resize(J, K);
  for (int k = 0; k < K; ++k) {
    double coupling = 0.0;
    for (int j = 0; j < J; ++j) coupling += Y(j, k);
    out.x(k) = X(k - 1) * (X(k + 1) - X(k - 2)) - X(k) + cfg.F + (cfg.h_x / J) * coupling;
    for (int j = 0; j < J; ++j) {
      out.y(j, k) = (Y(j + 1, k) * (Y(j - 1, k) - Y(j + 2, k)) - Y(j, k) + cfg.h_y * X(k)) / cfg.eps;
    }
  }
  return out;
}

template <typename A, typename B>
bool bitwise_equal(const A& a, const B& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

FullState random_state(const L96Config& cfg, std::uint64_t seed) {
  GaussianRng rng(seed);
  FullState s;
  s.x.resize(cfg.K);
  s.y.resize(cfg.J, cfg.K);
  for (int k = 0; k < cfg.K; ++k) s.x(k) = 3.0 * rng.normal();
  for (int j = 0; j < cfg.J; ++j)
    for (int k = 0; k < cfg.K; ++k) s.y(j, k) = 0.5 * rng.normal();
  return s;
}

}  // namespace

TEST_CASE("full-system field matches an index-naive reimplementation") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    L96Config cfg = tiny_config();
    FullState s = random_state(cfg, seed);
    FullState lib = full_rhs(cfg, s);
    FullState ref = naive_rhs(cfg, s);
    CHECK((lib.x - ref.x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((lib.y - ref.y).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("packed field matches the unpacked field and a tiny-step finite difference") {
  L96Config cfg = tiny_config();
  Lorenz96System sys(cfg);
  FullState s = random_state(cfg, 21);
  Eigen::VectorXd v = pack_state(s);
  REQUIRE(v.size() == sys.dim());

  Eigen::VectorXd out(sys.dim());
  sys.rhs(v, out);
  FullState ref = naive_rhs(cfg, s);
  Eigen::VectorXd ref_packed = pack_state(ref);
  CHECK((out - ref_packed).cwiseAbs().maxCoeff() < 1e-12);

  // (s(t+h) - s(t)) / h approximates ds/dt to first order in h.
  const double h = 1e-7;
  Eigen::VectorXd ahead = rk4_step([&](const Eigen::VectorXd& a, Eigen::VectorXd& b) { sys.rhs(a, b); },
                                   v, h);
  Eigen::VectorXd fd = (ahead - v) / h;
  CHECK((fd - out).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("pack/unpack is an exact round trip") {
  L96Config cfg = tiny_config();
  FullState s = random_state(cfg, 5);
  FullState back = unpack_state(cfg, pack_state(s));
  CHECK(bitwise_equal(back.x, s.x));
  CHECK(bitwise_equal(back.y, s.y));
}

TEST_CASE("index translation commutes with the field") {
  // Shifting every resolved index by one (and the fast ring with it) must
  // shift the field output identically: the dynamics have no preferred k.
  L96Config cfg = tiny_config();
  FullState s = random_state(cfg, 9);
  const int K = cfg.K;
  const int J = cfg.J;

  FullState shifted;
  shifted.x.resize(K);
  shifted.y.resize(J, K);
  for (int k = 0; k < K; ++k) {
    shifted.x((k + 1) % K) = s.x(k);
    for (int j = 0; j < J; ++j) shifted.y(j, (k + 1) % K) = s.y(j, k);
  }

  FullState f = full_rhs(cfg, s);
  FullState fs = full_rhs(cfg, shifted);
  for (int k = 0; k < K; ++k) {
    CHECK(fs.x((k + 1) % K) == f.x(k));
    for (int j = 0; j < J; ++j) CHECK(fs.y(j, (k + 1) % K) == f.y(j, k));
  }
}

TEST_CASE("integrator is fourth order on a linear decay") {
  // dy/dt = -y over [0, 1]: the global error of a fourth-order method
  // shrinks 16x when the step halves.
  auto rhs = [](const Eigen::VectorXd& y, Eigen::VectorXd& out) { out = -y; };
  auto integrate = [&](double dt) {
    Eigen::VectorXd y = Eigen::VectorXd::Ones(1);
    long n = std::lround(1.0 / dt);
    for (long i = 0; i < n; ++i) y = rk4_step(rhs, y, dt);
    return std::abs(y[0] - std::exp(-1.0));
  };
  double e1 = integrate(0.02);
  double e2 = integrate(0.01);
  CHECK(e1 / e2 > 13.0);
  CHECK(e1 / e2 < 19.0);
}

TEST_CASE("integrator is fourth order on the full system") {
  L96Config cfg = tiny_config();
  Lorenz96System sys(cfg);
  auto rhs = [&](const Eigen::VectorXd& a, Eigen::VectorXd& b) { sys.rhs(a, b); };
  Eigen::VectorXd s0 = pack_state(random_state(cfg, 33));

  auto integrate = [&](double dt) {
    Eigen::VectorXd s = s0;
    long n = std::lround(0.2 / dt);
    Rk4Stepper stepper(s.size());
    for (long i = 0; i < n; ++i) stepper.step(rhs, s, dt);
    return s;
  };
  Eigen::VectorXd ref = integrate(1e-5);
  double e1 = (integrate(2e-3) - ref).norm();
  double e2 = (integrate(1e-3) - ref).norm();
  CHECK(e1 / e2 > 12.0);
  CHECK(e1 / e2 < 20.0);
}

TEST_CASE("allocation-free stepper agrees with the one-shot step") {
  L96Config cfg = tiny_config();
  Lorenz96System sys(cfg);
  auto rhs = [&](const Eigen::VectorXd& a, Eigen::VectorXd& b) { sys.rhs(a, b); };
  Eigen::VectorXd s = pack_state(random_state(cfg, 4));
  Eigen::VectorXd one = rk4_step(rhs, s, 0.005);
  Rk4Stepper stepper(s.size());
  Eigen::VectorXd y = s;
  stepper.step(rhs, y, 0.005);
  CHECK((one - y).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("dataset generation is deterministic and has the documented shape") {
  L96Config cfg = tiny_config();
  SeriesSet a = generate_dataset(cfg, 4.0, 0.05);
  SeriesSet b = generate_dataset(cfg, 4.0, 0.05);
  CHECK(bitwise_equal(a.x_obs, b.x_obs));
  CHECK(a.delta == 0.05);
  // spinup 2.0, T 4.0 -> floor(2.0 / 0.05) + 1 rows.
  CHECK(a.steps() == 41);
  CHECK(a.components() == cfg.K);
  CHECK(a.x_obs.allFinite());

  SeriesSet c = generate_dataset(cfg, 4.0, 0.025);
  CHECK(c.steps() == 81);

  L96Config other = cfg;
  other.seed = 12;
  SeriesSet d = generate_dataset(other, 4.0, 0.05);
  CHECK((a.x_obs - d.x_obs).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("sampling interval must be a step multiple and T must cover the spinup") {
  L96Config cfg = tiny_config();
  CHECK_THROWS_AS(generate_dataset(cfg, 4.0, 0.0125), ConfigError);  // 2.5 steps per interval
  CHECK_THROWS_AS(generate_dataset(cfg, 1.0, 0.05), ConfigError);    // T < spinup
}

TEST_CASE("diverging trajectories raise a blow-up error") {
  L96Config cfg = tiny_config();
  cfg.F = 1e4;
  cfg.dt = 0.5;
  cfg.spinup = 0.0;
  CHECK_THROWS_AS(generate_dataset(cfg, 20.0, 0.5), BlowUpError);
}

TEST_CASE("configuration bounds are enforced") {
  L96Config cfg = tiny_config();
  cfg.K = 3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.J = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.eps = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.dt = -0.001;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.spinup = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("seed streams derived from one master are decorrelated") {
  // Identical (master, index) pairs must agree; distinct indices must not.
  CHECK(derive_seed(7, 1) == derive_seed(7, 1));
  CHECK(derive_seed(7, 1) != derive_seed(7, 2));
  CHECK(derive_seed(7, 1, 0) != derive_seed(7, 1, 1));
  CHECK(derive_seed(7, 1) != derive_seed(8, 1));

  // The Gaussian stream has roughly standard moments.
  GaussianRng rng(derive_seed(7, 3));
  const int n = 20000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double v = rng.normal();
    sum += v;
    sq += v * v;
  }
  double mean = sum / n;
  double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.03);
  CHECK(std::abs(var - 1.0) < 0.05);
}
