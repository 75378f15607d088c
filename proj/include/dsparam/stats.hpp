#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>

namespace dsparam {

struct PdfSpec {
  int grid_points = 512;
};

// Long-run summary of one scalar series.
struct SummaryStats {
  double mean = 0.0;
  double std = 0.0;                    // unbiased (N-1 denominator)
  Eigen::VectorXd pdf_grid;            // kernel density evaluation points
  Eigen::VectorXd pdf_density;
  Eigen::VectorXd acf;                 // lags 0..L
  std::optional<Eigen::VectorXd> ccf;  // lags -L..L when a pair was supplied
  std::optional<double> ks;            // two-sample distance vs a reference
};

// Sample autocorrelation with the biased normalization (divide by N and
// the lag-0 variance), so acf[0] == 1 and |acf| <= 1.
// Throws ConfigError if max_lag >= N, DegenerateDataError on zero variance.
Eigen::VectorXd autocorrelation(const Eigen::VectorXd& series, int max_lag);

// Normalized sample cross-correlation of two equal-length series at lags
// -max_lag..max_lag; entry [l + max_lag] estimates corr(a_t, b_{t+l}).
// Biased normalization keeps every value in [-1, 1].
Eigen::VectorXd cross_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b, int max_lag);

// Exact two-sample Kolmogorov-Smirnov statistic sup_x |F_a - F_b| via a
// merged sweep of the sorted samples (ties handled by advancing both sides
// through equal values before comparing).
double ks_statistic(Eigen::VectorXd a, Eigen::VectorXd b);

// Gaussian kernel density estimate with Silverman's bandwidth on a uniform
// grid spanning the data range extended by 3 bandwidths; the density is
// normalized to unit trapezoidal mass on its grid. Returns {grid, density}.
// Throws DegenerateDataError when the sample has no spread.
std::pair<Eigen::VectorXd, Eigen::VectorXd> kernel_density(const Eigen::VectorXd& sample,
                                                           int grid_points = 512);

// mean/std/pdf/acf bundle for one series.
SummaryStats summarize(const Eigen::VectorXd& series, int max_lag, const PdfSpec& pdf = {});

}  // namespace dsparam
