#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "dsparam/series.hpp"

namespace dsparam {

// Two-scale Lorenz 96 configuration. Each resolved component x_k is coupled
// to J fast components y_{j,k}; eps sets the time-scale separation and
// h_x, h_y the coupling strengths. Both index directions are cyclic:
//   x_{k+K} = x_k,  y_{j,k+K} = y_{j,k},  y_{j+J,k} = y_{j,k+1}.
struct L96Config {
  int K = 18;
  int J = 20;
  double F = 10.0;
  double eps = 0.5;
  double h_x = -1.0;
  double h_y = 1.0;
  double dt = 0.001;      // integrator step
  double spinup = 100.0;  // transient discarded before recording
  std::uint64_t seed = 0;

  // Throws ConfigError on out-of-range values (K >= 4, J >= 1, eps > 0, dt > 0, spinup >= 0).
  void validate() const;
};

// Unpacked full-system state: x has K entries, y is J x K with y(j, k) the
// j-th fast component attached to x_k.
struct FullState {
  Eigen::VectorXd x;
  Eigen::MatrixXd y;
};

// Flat packing used by the integrator: [x_0..x_{K-1}, y ring of J*K values]
// where the y block is column-major (all J values for k=0, then k=1, ...).
// In that flat ordering the rule y_{j+J,k} = y_{j,k+1} is plain index
// continuity, so the fast block is a single cyclic ring of length J*K.
Eigen::VectorXd pack_state(const FullState& s);
FullState unpack_state(const L96Config& cfg, const Eigen::VectorXd& v);

// Time derivative of the full two-scale system at state s.
// Throws ConfigError on dimension mismatch with cfg.
FullState full_rhs(const L96Config& cfg, const FullState& s);

using RhsFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// One classical fourth-order Runge-Kutta step of ds/dt = rhs(s).
// dt = 0 returns s unchanged; dt < 0 throws ConfigError.
Eigen::VectorXd rk4_step(const RhsFn& rhs, const Eigen::VectorXd& s, double dt);

// Allocation-free RK4 stepper for tight integration loops.
class Rk4Stepper {
 public:
  explicit Rk4Stepper(Eigen::Index dim)
      : k1_(dim), k2_(dim), k3_(dim), k4_(dim), tmp_(dim) {}

  template <typename Rhs>
  void step(const Rhs& rhs, Eigen::VectorXd& s, double dt) {
    rhs(s, k1_);
    tmp_ = s + (0.5 * dt) * k1_;
    rhs(tmp_, k2_);
    tmp_ = s + (0.5 * dt) * k2_;
    rhs(tmp_, k3_);
    tmp_ = s + dt * k3_;
    rhs(tmp_, k4_);
    s += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
  }

 private:
  Eigen::VectorXd k1_, k2_, k3_, k4_, tmp_;
};

// Full-system right-hand side over the packed state.
class Lorenz96System {
 public:
  explicit Lorenz96System(const L96Config& cfg);

  // out = d(state)/dt; both vectors have K + J*K entries.
  void rhs(const Eigen::VectorXd& state, Eigen::VectorXd& out) const;

  // Seeded random initial condition: x uniform in [-F/2, F/2], fast
  // components uniform in [-0.1, 0.1].
  Eigen::VectorXd initial_state(std::uint64_t seed) const;

  Eigen::Index dim() const { return cfg_.K + static_cast<Eigen::Index>(cfg_.J) * cfg_.K; }
  const L96Config& config() const { return cfg_; }

 private:
  L96Config cfg_;
};

// Integrates the full system from a seeded initial condition with step
// cfg.dt, discards the spinup interval, then records the resolved x every
// delta up to total time T (T includes the spinup). The recorded rows are
// floor((T - spinup)/delta) + 1 observations.
//
// Preconditions: delta is an integer multiple of cfg.dt, T >= spinup.
// Throws BlowUpError if any state magnitude exceeds 1e6 or goes non-finite.
// Deterministic: identical cfg (including seed) gives bitwise-equal output.
SeriesSet generate_dataset(const L96Config& cfg, double T, double delta);

// Magnitude above which a trajectory is declared blown up.
inline constexpr double kBlowUpThreshold = 1e6;

}  // namespace dsparam
