#pragma once

#include <Eigen/Dense>
#include <optional>

namespace dsparam {

// Uniformly sampled multivariate time series with sampling interval delta.
// x_obs holds one observation per row (N rows, K columns).
//
// z and xi, when present, hold the discrete unresolved tendency and the
// model residuals. They have N-1 rows and are aligned so that row i is the
// value indexed by time step i+1: the tendency is defined from a pair of
// consecutive observations and first exists at step 1.
struct SeriesSet {
  double delta = 0.0;
  Eigen::MatrixXd x_obs;
  std::optional<Eigen::MatrixXd> z;
  std::optional<Eigen::MatrixXd> xi;

  long steps() const { return x_obs.rows(); }
  int components() const { return static_cast<int>(x_obs.cols()); }
};

}  // namespace dsparam
