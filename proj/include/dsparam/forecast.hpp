#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "dsparam/narmax.hpp"
#include "dsparam/polyar.hpp"
#include "dsparam/reduction.hpp"

namespace dsparam {

// A stochastic reduced model usable for ensemble forecasting: given an
// initialization window of observed rows it produces n_steps forecast rows.
// Implementations must be deterministic in (window, n_steps, seed).
class EnsembleModel {
 public:
  virtual ~EnsembleModel() = default;

  // Forecast rows for steps window_rows .. window_rows + n_steps - 1.
  virtual Eigen::MatrixXd forecast(const Eigen::MatrixXd& window, long n_steps,
                                   std::uint64_t seed) const = 0;

  // Minimum window rows required to seed the lag state.
  virtual int min_init_steps() const = 0;
};

class NarmaxEnsembleModel final : public EnsembleModel {
 public:
  NarmaxEnsembleModel(NarmaxStructure st, NarmaxParams params, ReducedMap map);
  Eigen::MatrixXd forecast(const Eigen::MatrixXd& window, long n_steps,
                           std::uint64_t seed) const override;
  int min_init_steps() const override;

 private:
  NarmaxStructure st_;
  NarmaxParams params_;
  ReducedMap map_;
};

class PolyarEnsembleModel final : public EnsembleModel {
 public:
  // The AR(1) state is seeded from the window's forward-difference
  // tendency; the last window row starts the trajectory.
  PolyarEnsembleModel(PolyarParams params, double F);
  Eigen::MatrixXd forecast(const Eigen::MatrixXd& window, long n_steps,
                           std::uint64_t seed) const override;
  int min_init_steps() const override;

 private:
  PolyarParams params_;
  double F_;
};

struct ForecastConfig {
  int init_steps = 2;        // window rows handed to the model (>= its minimum)
  int ensemble_size = 20;    // members per segment, all from the same window
  std::uint64_t seed = 0;    // master seed; member streams are derived
};

// Forecast skill over verification segments, per lead time.
struct ForecastScore {
  Eigen::VectorXd lead_times;  // time units past the window, starting at 0
  Eigen::VectorXd rmse;        // ensemble-mean RMSE over segments and components
  Eigen::VectorXd ancr;        // anomaly correlation (cosine of anomaly vectors)
  long total_members = 0;
  long excluded_members = 0;   // blown-up members dropped from the averages
};

// Runs an ensemble forecast against each truth segment: the first
// init_steps rows initialize the model, members are propagated to the end
// of the segment, and the ensemble mean is scored against the remaining
// truth rows. Anomalies are taken about the supplied climatological mean
// vector. Member seeds derive from (seed, segment, member), so results do
// not depend on evaluation order. Members that blow up are excluded; more
// than 1% exclusions is an error.
// Preconditions: every segment has > init_steps rows and K columns
// matching the climatology; init_steps >= model.min_init_steps().
ForecastScore run_forecast(const EnsembleModel& model,
                           const std::vector<Eigen::MatrixXd>& truth_segments, double delta,
                           const ForecastConfig& cfg, const Eigen::VectorXd& climatology);

}  // namespace dsparam
