#pragma once

// Summary statistics and the one-sample Kolmogorov-Smirnov test against the
// standard normal distribution.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace tautband {

struct SummaryStats {
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> variance;  // unbiased; absent when n < 2
  double skewness = 0.0;           // NaN when undefined
  double excess_kurtosis = 0.0;    // NaN when undefined
  double min = 0.0;
  double max = 0.0;
};

// Two-pass (mean-subtracted) moments.
inline SummaryStats summarize(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("summarize: empty sample");
  SummaryStats s;
  s.n = xs.size();
  double sum = 0.0;
  s.min = xs.front();
  s.max = xs.front();
  for (double x : xs) {
    sum += x;
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  const double n = static_cast<double>(s.n);
  s.mean = sum / n;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  s.skewness = nan;
  s.excess_kurtosis = nan;
  if (s.n < 2) return s;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - s.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  s.variance = m2 / (n - 1.0);
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 > 0.0) {
    s.skewness = m3 / std::pow(m2, 1.5);
    s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return s;
}

// Unbiased sample covariance.
inline double covariance(const std::vector<double>& x,
                         const std::vector<double>& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("covariance: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("covariance: need n >= 2");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    acc += (x[i] - mx) * (y[i] - my);
  return acc / (n - 1.0);
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / 1.4142135623730951);
}

// Survival function of the Kolmogorov distribution,
// Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2),
// truncated once terms drop below 1e-12.
inline double kolmogorov_p_value(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k < 100000; ++k) {
    const double term = std::exp(-2.0 * lambda * lambda * k * k);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// One-sample KS statistic against the standard normal CDF, with the
// asymptotic p-value.
inline KsResult ks_normality(const std::vector<double>& samples) {
  if (samples.empty()) throw std::invalid_argument("ks_normality: empty sample");
  std::vector<double> xs(samples);
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = normal_cdf(xs[i]);
    d = std::max(d, f - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
  }
  return {d, kolmogorov_p_value(std::sqrt(n) * d)};
}

// Linearly interpolated quantile of a sample (does not need to be sorted).
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q in [0,1]");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= xs.size()) return xs.back();
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] + frac * (xs[lo + 1] - xs[lo]);
}

}  // namespace tautband
