#include "dsparam/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dsparam/errors.hpp"

namespace dsparam {

namespace {

void check_series(const Eigen::VectorXd& series, Eigen::Index min_len, const char* what) {
  if (series.size() < min_len)
    throw ConfigError(std::string(what) + ": series too short");
  if (!series.allFinite())
    throw NumericalError(std::string(what) + ": series contains non-finite values");
}

}  // namespace

Eigen::VectorXd autocorrelation(const Eigen::VectorXd& series, int max_lag) {
  check_series(series, 2, "autocorrelation");
  if (max_lag < 0) throw ConfigError("autocorrelation: max_lag must be >= 0");
  const Eigen::Index n = series.size();
  if (max_lag >= n) throw ConfigError("autocorrelation: max_lag must be below the series length");

  const double mean = series.mean();
  const Eigen::VectorXd centered = series.array() - mean;
  const double c0 = centered.squaredNorm() / static_cast<double>(n);
  if (c0 <= 0.0) throw DegenerateDataError("autocorrelation: series has zero variance");

  Eigen::VectorXd acf(max_lag + 1);
  for (int l = 0; l <= max_lag; ++l) {
    const Eigen::Index m = n - l;
    const double cl = centered.head(m).dot(centered.tail(m)) / static_cast<double>(n);
    acf[l] = cl / c0;
  }
  return acf;
}

Eigen::VectorXd cross_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                  int max_lag) {
  check_series(a, 2, "cross-correlation");
  check_series(b, 2, "cross-correlation");
  if (a.size() != b.size()) throw ConfigError("cross-correlation: series lengths differ");
  if (max_lag < 0 || max_lag >= a.size())
    throw ConfigError("cross-correlation: max_lag out of range");

  const Eigen::Index n = a.size();
  const Eigen::VectorXd ca = a.array() - a.mean();
  const Eigen::VectorXd cb = b.array() - b.mean();
  const double sa = std::sqrt(ca.squaredNorm() / static_cast<double>(n));
  const double sb = std::sqrt(cb.squaredNorm() / static_cast<double>(n));
  if (sa <= 0.0 || sb <= 0.0)
    throw DegenerateDataError("cross-correlation: a series has zero variance");

  // Biased normalization (always divide by n), which keeps every entry in
  // [-1, 1] by Cauchy-Schwarz on the zero-padded sequences.
  Eigen::VectorXd ccf(2 * max_lag + 1);
  const double norm = static_cast<double>(n) * sa * sb;
  for (int l = -max_lag; l <= max_lag; ++l) {
    const Eigen::Index m = n - std::abs(l);
    double acc = (l >= 0) ? ca.head(m).dot(cb.tail(m)) : ca.tail(m).dot(cb.head(m));
    ccf[l + max_lag] = acc / norm;
  }
  return ccf;
}

double ks_statistic(Eigen::VectorXd a, Eigen::VectorXd b) {
  check_series(a, 1, "ks");
  check_series(b, 1, "ks");
  std::sort(a.data(), a.data() + a.size());
  std::sort(b.data(), b.data() + b.size());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());

  // Sweep the merged order statistics; at a tie both empirical CDFs jump
  // together, so advance through all equal values before comparing.
  Eigen::Index i = 0;
  Eigen::Index j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  // Once one sample is exhausted the gap only shrinks toward |1 - F|, and
  // the largest remaining value is at the crossover already visited.
  return d;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> kernel_density(const Eigen::VectorXd& sample,
                                                           int grid_points) {
  check_series(sample, 2, "kde");
  if (grid_points < 2) throw ConfigError("kde: need at least two grid points");
  const Eigen::Index n = sample.size();

  const double mean = sample.mean();
  const double sd = std::sqrt((sample.array() - mean).square().sum() / static_cast<double>(n - 1));

  std::vector<double> sorted(sample.data(), sample.data() + n);
  std::sort(sorted.begin(), sorted.end());
  // An all-equal sample has exactly zero spread; the moment-based estimate
  // below could report a stray rounding residue instead, so test the range.
  if (!(sorted.back() > sorted.front()))
    throw DegenerateDataError("kde: sample has no spread");
  auto quantile = [&](double f) {
    const double pos = f * static_cast<double>(n - 1);
    const Eigen::Index lo = static_cast<Eigen::Index>(std::floor(pos));
    const Eigen::Index hi = std::min<Eigen::Index>(lo + 1, n - 1);
    const double w = pos - static_cast<double>(lo);
    return (1.0 - w) * sorted[static_cast<std::size_t>(lo)] +
           w * sorted[static_cast<std::size_t>(hi)];
  };
  const double iqr = quantile(0.75) - quantile(0.25);

  // Silverman's rule of thumb with the robust spread estimate.
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
  if (!(h > 0.0)) throw DegenerateDataError("kde: sample has no spread");

  const double lo = sorted.front() - 3.0 * h;
  const double hi = sorted.back() + 3.0 * h;
  Eigen::VectorXd grid(grid_points);
  Eigen::VectorXd density = Eigen::VectorXd::Zero(grid_points);
  const double dx = (hi - lo) / static_cast<double>(grid_points - 1);
  for (int g = 0; g < grid_points; ++g) grid[g] = lo + dx * g;

  // Kernels beyond 8 bandwidths contribute below 1e-14 of their mass; a
  // two-pointer window over the sorted sample keeps the sweep linear-ish.
  constexpr double kSqrt2Pi = 2.5066282746310005024;
  const double cutoff = 8.0 * h;
  const double inv_h = 1.0 / h;
  const double norm = 1.0 / (static_cast<double>(n) * h * kSqrt2Pi);
  std::size_t w_lo = 0;
  std::size_t w_hi = 0;
  for (int g = 0; g < grid_points; ++g) {
    const double c = grid[g];
    while (w_lo < sorted.size() && sorted[w_lo] < c - cutoff) ++w_lo;
    if (w_hi < w_lo) w_hi = w_lo;
    while (w_hi < sorted.size() && sorted[w_hi] <= c + cutoff) ++w_hi;
    double acc = 0.0;
    for (std::size_t t = w_lo; t < w_hi; ++t) {
      const double u = (sorted[t] - c) * inv_h;
      acc += std::exp(-0.5 * u * u);
    }
    density[g] = acc * norm;
  }

  // Renormalize to unit trapezoidal mass on the grid: the +-3h extension
  // clips a sliver of kernel mass at the edges that would otherwise leave
  // the integral short by ~1e-5.
  double mass = 0.0;
  for (int g = 0; g + 1 < grid_points; ++g) mass += 0.5 * (density[g] + density[g + 1]) * dx;
  if (mass <= 0.0) throw DegenerateDataError("kde: zero density mass");
  density /= mass;
  return {grid, density};
}

SummaryStats summarize(const Eigen::VectorXd& series, int max_lag, const PdfSpec& pdf) {
  check_series(series, 2, "summarize");
  SummaryStats out;
  const Eigen::Index n = series.size();
  out.mean = series.mean();
  out.std = std::sqrt((series.array() - out.mean).square().sum() / static_cast<double>(n - 1));
  auto [grid, density] = kernel_density(series, pdf.grid_points);
  out.pdf_grid = std::move(grid);
  out.pdf_density = std::move(density);
  out.acf = autocorrelation(series, max_lag);
  return out;
}

}  // namespace dsparam
