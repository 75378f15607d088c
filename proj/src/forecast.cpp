#include "dsparam/forecast.hpp"

#include <cmath>

#include "dsparam/errors.hpp"
#include "dsparam/polyar.hpp"
#include "dsparam/rng.hpp"

namespace dsparam {

NarmaxEnsembleModel::NarmaxEnsembleModel(NarmaxStructure st, NarmaxParams params, ReducedMap map)
    : st_(st), params_(std::move(params)), map_(map) {
  st_.validate();
  params_.validate(st_);
  map_.validate();
}

int NarmaxEnsembleModel::min_init_steps() const { return st_.init_steps(); }

Eigen::MatrixXd NarmaxEnsembleModel::forecast(const Eigen::MatrixXd& window, long n_steps,
                                              std::uint64_t seed) const {
  const SeriesSet sim = simulate(st_, params_, map_, window, n_steps, seed);
  return sim.x_obs.bottomRows(n_steps);
}

PolyarEnsembleModel::PolyarEnsembleModel(PolyarParams params, double F)
    : params_(std::move(params)), F_(F) {
  params_.validate();
}

int PolyarEnsembleModel::min_init_steps() const { return 2; }

Eigen::MatrixXd PolyarEnsembleModel::forecast(const Eigen::MatrixXd& window, long n_steps,
                                              std::uint64_t seed) const {
  const long w = window.rows();
  if (w < 2) throw ConfigError("polyar forecast: window needs at least two rows");
  // The latest AR(1) state derivable from data lags the window end by one
  // step (the tendency estimate needs the next observation), so the
  // simulation starts from the last window row with that state; the first
  // loop iteration advances the AR(1) before the first forecast step.
  const Eigen::MatrixXd z_fd = estimate_z_fd(F_, window, params_.delta);
  Eigen::VectorXd eta(window.cols());
  for (Eigen::Index k = 0; k < window.cols(); ++k)
    eta[k] = z_fd(w - 2, k) - eval_poly(params_.poly, window(w - 2, k));
  const SeriesSet sim =
      simulate_polyar(params_, F_, Eigen::VectorXd(window.row(w - 1)), eta, n_steps, seed);
  return sim.x_obs.bottomRows(n_steps);
}

ForecastScore run_forecast(const EnsembleModel& model,
                           const std::vector<Eigen::MatrixXd>& truth_segments, double delta,
                           const ForecastConfig& cfg, const Eigen::VectorXd& climatology) {
  if (truth_segments.empty()) throw ConfigError("forecast: no verification segments");
  if (cfg.ensemble_size < 1) throw ConfigError("forecast: ensemble_size must be >= 1");
  if (cfg.init_steps < model.min_init_steps())
    throw ConfigError("forecast: init_steps below the model's minimum window");
  if (!(delta > 0.0)) throw ConfigError("forecast: delta must be > 0");

  const Eigen::Index k_comps = climatology.size();
  const Eigen::Index seg_rows = truth_segments.front().rows();
  const long n_leads = seg_rows - cfg.init_steps;  // leads 1..n_leads past the window
  if (n_leads < 1) throw ConfigError("forecast: segments must be longer than init_steps");
  for (const auto& seg : truth_segments) {
    if (seg.rows() != seg_rows || seg.cols() != k_comps)
      throw ConfigError("forecast: segments must share one shape matching the climatology");
  }

  ForecastScore score;
  score.lead_times.resize(n_leads + 1);
  for (long j = 0; j <= n_leads; ++j) score.lead_times[j] = static_cast<double>(j) * delta;
  Eigen::VectorXd sq_err = Eigen::VectorXd::Zero(n_leads + 1);
  Eigen::VectorXd ancr_sum = Eigen::VectorXd::Zero(n_leads + 1);
  std::vector<long> seg_count(static_cast<std::size_t>(n_leads + 1), 0);

  Eigen::MatrixXd mean_fc(n_leads, k_comps);
  for (std::size_t seg = 0; seg < truth_segments.size(); ++seg) {
    const Eigen::MatrixXd& truth = truth_segments[seg];
    const Eigen::MatrixXd window = truth.topRows(cfg.init_steps);

    mean_fc.setZero();
    long members = 0;
    for (int mem = 0; mem < cfg.ensemble_size; ++mem) {
      ++score.total_members;
      const std::uint64_t member_seed =
          derive_seed(cfg.seed, static_cast<std::uint64_t>(seg), static_cast<std::uint64_t>(mem));
      try {
        mean_fc += model.forecast(window, n_leads, member_seed);
        ++members;
      } catch (const BlowUpError&) {
        ++score.excluded_members;
      }
    }
    if (members == 0) continue;  // segment unusable; counted via exclusions
    mean_fc /= static_cast<double>(members);

    // Lead 0 is the analysis (last window row): forecast equals truth.
    seg_count[0] += 1;
    ancr_sum[0] += 1.0;
    for (long j = 1; j <= n_leads; ++j) {
      const Eigen::VectorXd fc = mean_fc.row(j - 1);
      const Eigen::VectorXd tr = truth.row(cfg.init_steps - 1 + j);
      sq_err[j] += (fc - tr).squaredNorm();
      const Eigen::VectorXd fa = fc - climatology;
      const Eigen::VectorXd ta = tr - climatology;
      const double na = fa.norm() * ta.norm();
      ancr_sum[j] += (na > 0.0) ? fa.dot(ta) / na : 0.0;
      seg_count[j] += 1;
    }
  }

  if (score.excluded_members * 100 > score.total_members)
    throw NumericalError("forecast: more than 1% of ensemble members blew up");
  if (seg_count[0] == 0) throw NumericalError("forecast: no usable segments");

  score.rmse.resize(n_leads + 1);
  score.ancr.resize(n_leads + 1);
  score.rmse[0] = 0.0;
  score.ancr[0] = 1.0;
  for (long j = 1; j <= n_leads; ++j) {
    const double denom = static_cast<double>(seg_count[j]) * static_cast<double>(k_comps);
    score.rmse[j] = std::sqrt(sq_err[j] / denom);
    score.ancr[j] = ancr_sum[j] / static_cast<double>(seg_count[j]);
  }
  return score;
}

}  // namespace dsparam
