#ifndef HIDDEN_AR_STATS_HPP
#define HIDDEN_AR_STATS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace hidden_ar::stats {

inline double mean(std::span<const double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Unbiased sample variance (two-pass).
inline double variance(std::span<const double> v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline double covariance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size() || u.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mu = mean(u), mv = mean(v);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += (u[i] - mu) * (v[i] - mv);
  return s / static_cast<double>(u.size() - 1);
}

/// Sample autocorrelation at `lag` around the sample mean.
inline double autocorrelation(std::span<const double> v, std::size_t lag) {
  const double m = mean(v);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    den += (v[i] - m) * (v[i] - m);
    if (i >= lag) num += (v[i] - m) * (v[i - lag] - m);
  }
  return num / den;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Kolmogorov-Smirnov distance between the sample and N(0, variance).
inline double ks_statistic(std::span<const double> sample, double variance = 1.0) {
  if (sample.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> z(sample.begin(), sample.end());
  std::sort(z.begin(), z.end());
  const double sd = std::sqrt(variance);
  const double n = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double c = normal_cdf(z[i] / sd);
    d = std::max({d, static_cast<double>(i + 1) / n - c, c - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic p-value of the KS distance `d` for sample size `n`, using the
/// Stephens small-sample correction of the Kolmogorov series.
inline double ks_pvalue(double d, std::size_t n) {
  if (!(d >= 0.0) || n == 0) return std::numeric_limits<double>::quiet_NaN();
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 1e-3) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    p += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace hidden_ar::stats

#endif  // HIDDEN_AR_STATS_HPP
