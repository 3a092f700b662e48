#pragma once

// Sampled continuous paths on strictly increasing time grids, seeded Brownian
// path generation, convex slope penalties and the associated energy
// functional.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tautband/rng.hpp"

namespace tautband {

// A continuous path given by linear interpolation between grid samples.
struct PiecewiseLinearPath {
  std::vector<double> times;
  std::vector<double> values;

  PiecewiseLinearPath() = default;
  PiecewiseLinearPath(std::vector<double> t, std::vector<double> v)
      : times(std::move(t)), values(std::move(v)) {
    validate();
  }

  std::size_t size() const { return times.size(); }
  double horizon() const { return times.back() - times.front(); }

  // Linear interpolation; exact at grid points.
  double value_at(double t) const {
    if (t <= times.front()) {
      if (t < times.front())
        throw std::invalid_argument("value_at: time before grid start");
      return values.front();
    }
    if (t >= times.back()) {
      if (t > times.back())
        throw std::invalid_argument("value_at: time after grid end");
      return values.back();
    }
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - times.begin());
    if (times[j - 1] == t) return values[j - 1];
    const double lam = (t - times[j - 1]) / (times[j] - times[j - 1]);
    return values[j - 1] + lam * (values[j] - values[j - 1]);
  }

  double max_abs_value() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }

  void validate() const {
    if (times.size() != values.size())
      throw std::invalid_argument("path: times/values length mismatch");
    if (times.size() < 2)
      throw std::invalid_argument("path: need at least two grid points");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1]))
        throw std::invalid_argument("path: times must be strictly increasing");
  }
};

enum class PenaltyKind { quadratic, power, sqrt1p };

// A convex, even slope penalty c. quadratic: x^2; power: |x|^alpha with
// alpha > 1; sqrt1p: sqrt(1 + x^2).
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::quadratic;
  double exponent = 2.0;  // used by power only

  static PenaltySpec quadratic() { return {PenaltyKind::quadratic, 2.0}; }
  static PenaltySpec power(double alpha) {
    if (!(alpha > 1.0))
      throw std::invalid_argument("PenaltySpec::power: alpha must be > 1");
    return {PenaltyKind::power, alpha};
  }
  static PenaltySpec sqrt1p() { return {PenaltyKind::sqrt1p, 0.0}; }

  // |slope| is clamped at 1e150 before exponentiation so pathological inputs
  // do not trap.
  double operator()(double slope) const {
    double a = std::min(std::abs(slope), 1e150);
    switch (kind) {
      case PenaltyKind::quadratic:
        return a * a;
      case PenaltyKind::power:
        return std::pow(a, exponent);
      case PenaltyKind::sqrt1p:
        return std::hypot(1.0, a);
    }
    return 0.0;
  }

  double derivative(double slope) const {
    const double s = slope < 0 ? -1.0 : 1.0;
    double a = std::min(std::abs(slope), 1e150);
    switch (kind) {
      case PenaltyKind::quadratic:
        return 2.0 * s * a;
      case PenaltyKind::power:
        return s * exponent * std::pow(a, exponent - 1.0);
      case PenaltyKind::sqrt1p:
        return slope / std::hypot(1.0, a);
    }
    return 0.0;
  }

  std::string name() const {
    switch (kind) {
      case PenaltyKind::quadratic:
        return "quadratic";
      case PenaltyKind::sqrt1p:
        return "sqrt1p";
      case PenaltyKind::power: {
        // trim trailing zeros: power4, power2.5, ...
        std::string e = std::to_string(exponent);
        e.erase(e.find_last_not_of('0') + 1);
        if (!e.empty() && e.back() == '.') e.pop_back();
        return "power" + e;
      }
    }
    return "?";
  }

  bool operator==(const PenaltySpec& o) const {
    if (kind != o.kind) return false;
    return kind != PenaltyKind::power || exponent == o.exponent;
  }
};

// Seeded Brownian path on the grid {0, dt, 2dt, ..., T} (last point exactly
// T). Increments are independent centered Gaussians with variance equal to
// the grid gap; identical arguments reproduce the path bit for bit.
inline PiecewiseLinearPath generate_brownian(double horizon, double dt,
                                             std::uint64_t seed) {
  if (!(horizon > 0.0)) throw std::invalid_argument("generate_brownian: T must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("generate_brownian: dt must be > 0");
  if (!(dt <= horizon)) throw std::invalid_argument("generate_brownian: dt must be <= T");

  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(horizon / dt) + 2);
  times.push_back(0.0);
  const double cutoff = horizon - 1e-9 * dt;
  for (std::size_t i = 1;; ++i) {
    const double t = static_cast<double>(i) * dt;
    if (t >= cutoff) break;
    times.push_back(t);
  }
  times.push_back(horizon);

  std::vector<double> values(times.size());
  values[0] = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double gap = times[i] - times[i - 1];
    const double z = inverse_normal_cdf(to_unit_open(counter_u64(seed, i - 1)));
    values[i] = values[i - 1] + z * std::sqrt(gap);
  }
  return PiecewiseLinearPath(std::move(times), std::move(values));
}

// Integrated slope penalty: sum of c(slope_i) * gap_i over segments.
inline double energy(const PiecewiseLinearPath& path, const PenaltySpec& c) {
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double gap = path.times[i] - path.times[i - 1];
    const double slope = (path.values[i] - path.values[i - 1]) / gap;
    total += c(slope) * gap;
  }
  return total;
}

// Supremum distance of two paths sharing a grid; exact because the
// difference of two piecewise-linear paths on a common grid attains its
// maximum at grid points.
inline double sup_distance(const PiecewiseLinearPath& a,
                           const PiecewiseLinearPath& b) {
  if (a.size() != b.size() || !std::equal(a.times.begin(), a.times.end(),
                                          b.times.begin()))
    throw std::invalid_argument("sup_distance: paths must share the time grid");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

// Restriction of a path to [a, b]; endpoints are inserted by interpolation
// when they are not grid points.
inline PiecewiseLinearPath restrict_path(const PiecewiseLinearPath& p,
                                         double a, double b) {
  if (!(a < b)) throw std::invalid_argument("restrict_path: need a < b");
  if (a < p.times.front() || b > p.times.back())
    throw std::invalid_argument("restrict_path: window outside the grid");
  std::vector<double> t, v;
  t.push_back(a);
  v.push_back(p.value_at(a));
  const auto lo = std::upper_bound(p.times.begin(), p.times.end(), a);
  const auto hi = std::lower_bound(p.times.begin(), p.times.end(), b);
  for (auto it = lo; it != hi; ++it) {
    const std::size_t j = static_cast<std::size_t>(it - p.times.begin());
    t.push_back(p.times[j]);
    v.push_back(p.values[j]);
  }
  t.push_back(b);
  v.push_back(p.value_at(b));
  return PiecewiseLinearPath(std::move(t), std::move(v));
}

}  // namespace tautband
