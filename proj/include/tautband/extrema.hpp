#pragma once

// Alternating h-rise / h-fall stopping times of a sampled path, the
// quarter-width crossing skeleton, and the free-knot interpolant built on
// it. Crossing instants are located by linear interpolation inside the
// bracketing grid cell, which is exact for piecewise-linear paths; extremum
// locations are grid vertices, taken at the last attaining instant.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tautband/path.hpp"

namespace tautband {

struct HExtremaDecomposition {
  std::vector<double> t;                 // t[0] = grid start, then crossing completions
  std::vector<double> t_bar;             // extremum locations, same length as t
  std::vector<std::size_t> t_bar_index;  // grid index of each t_bar
  std::vector<double> extremum_values;   // path value at each t_bar
  std::size_t count = 0;                 // N(T): largest n with t_bar[n] realized
  double width = 0.0;
};

struct CrossingSkeleton {
  std::vector<double> sigma;     // sigma[0] = grid start
  std::vector<int> delta;        // delta[k] = sign of crossing k+1
  std::vector<std::size_t> n_k;  // indices of the four-equal-signs rule
  double width = 0.0;
};

namespace detail {

struct ExtremumEvent {
  std::size_t n = 0;           // 1-based crossing index
  double t_n = 0.0;            // crossing completion time (interpolated)
  double t_bar = 0.0;          // last attainment of the running extremum
  std::size_t t_bar_index = 0; // its grid index
  double extremum_value = 0.0; // path value there
};

// Incremental state machine over streamed grid points. Alternates between
// waiting for an h-rise above the running minimum and an h-fall below the
// running maximum; at most one crossing completes per (monotone) segment.
class HExtremaTracker {
 public:
  explicit HExtremaTracker(double h) : h_(h) {
    if (!(h > 0.0)) throw std::invalid_argument("h-extrema: width must be > 0");
  }

  std::optional<ExtremumEvent> push(std::size_t index, double t, double w) {
    if (!primed_) {
      primed_ = true;
      prev_t_ = t;
      prev_w_ = w;
      ext_val_ = w;
      ext_t_ = t;
      ext_idx_ = index;
      return std::nullopt;
    }
    std::optional<ExtremumEvent> ev;
    if (seeking_rise_) {
      const double level = ext_val_ + h_;
      if (w >= level) {
        const double tc =
            prev_t_ + (level - prev_w_) / (w - prev_w_) * (t - prev_t_);
        ev = ExtremumEvent{++count_, tc, ext_t_, ext_idx_, ext_val_};
        seeking_rise_ = false;
        ext_val_ = level;  // running max restarts at the crossing point
        ext_t_ = tc;
        ext_idx_ = index;  // immediately refreshed by the update below
      }
    } else {
      const double level = ext_val_ - h_;
      if (w <= level) {
        const double tc =
            prev_t_ + (level - prev_w_) / (w - prev_w_) * (t - prev_t_);
        ev = ExtremumEvent{++count_, tc, ext_t_, ext_idx_, ext_val_};
        seeking_rise_ = true;
        ext_val_ = level;
        ext_t_ = tc;
        ext_idx_ = index;
      }
    }
    const bool better = seeking_rise_ ? (w <= ext_val_) : (w >= ext_val_);
    if (better) {
      ext_val_ = w;
      ext_t_ = t;  // last attaining instant wins ties
      ext_idx_ = index;
    }
    prev_t_ = t;
    prev_w_ = w;
    return ev;
  }

  std::size_t completed() const { return count_; }

 private:
  double h_;
  bool primed_ = false;
  bool seeking_rise_ = true;
  double prev_t_ = 0.0, prev_w_ = 0.0;
  double ext_val_ = 0.0;
  double ext_t_ = 0.0;
  std::size_t ext_idx_ = 0;
  std::size_t count_ = 0;
};

}  // namespace detail

inline HExtremaDecomposition decompose(const PiecewiseLinearPath& path,
                                       double width) {
  detail::HExtremaTracker tracker(width);
  HExtremaDecomposition d;
  d.width = width;
  d.t.push_back(path.times.front());
  d.t_bar.push_back(path.times.front());
  d.t_bar_index.push_back(0);
  d.extremum_values.push_back(path.values.front());
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (auto ev = tracker.push(i, path.times[i], path.values[i])) {
      d.t.push_back(ev->t_n);
      d.t_bar.push_back(ev->t_bar);
      d.t_bar_index.push_back(ev->t_bar_index);
      d.extremum_values.push_back(ev->extremum_value);
    }
  }
  d.count = d.t.size() - 1;
  return d;
}

inline CrossingSkeleton crossing_skeleton(const PiecewiseLinearPath& path,
                                          double width) {
  if (!(width > 0.0))
    throw std::invalid_argument("crossing_skeleton: width must be > 0");
  const double q = width / 4.0;
  CrossingSkeleton s;
  s.width = width;
  s.sigma.push_back(path.times.front());
  double anchor = path.values.front();
  for (std::size_t i = 1; i < path.size(); ++i) {
    double ta = path.times[i - 1], wa = path.values[i - 1];
    const double tb = path.times[i], wb = path.values[i];
    // a long monotone segment can complete several crossings
    for (;;) {
      const double up = anchor + q, down = anchor - q;
      double tc, level;
      int sign;
      if (wb >= up && wb > wa) {
        level = up;
        sign = 1;
      } else if (wb <= down && wb < wa) {
        level = down;
        sign = -1;
      } else {
        break;
      }
      tc = ta + (level - wa) / (wb - wa) * (tb - ta);
      s.sigma.push_back(tc);
      s.delta.push_back(sign);
      anchor = level;
      ta = tc;
      wa = level;
      if (tc >= tb) break;
    }
  }
  // four consecutive equal signs ending at a multiple of four, with target
  // sign alternating across k
  std::size_t prev_nk = 0;
  for (int k = 1;; ++k) {
    const int target = (k % 2 == 1) ? 1 : -1;
    std::size_t found = 0;
    for (std::size_t i = std::max<std::size_t>(prev_nk, 1);
         4 * i <= s.delta.size(); ++i) {
      bool all = true;
      for (std::size_t m = 4 * i - 3; m <= 4 * i; ++m)
        if (s.delta[m - 1] != target) {
          all = false;
          break;
        }
      if (all) {
        found = i;
        break;
      }
    }
    if (found == 0) break;
    s.n_k.push_back(found);
    prev_nk = found;
  }
  return s;
}

// Piecewise-linear interpolation of the skeleton points (sigma_n, w(sigma_n));
// an admissible competitor for the tube of width h around the path. Degenerate
// skeletons (no crossings) yield the constant path at the starting value.
inline PiecewiseLinearPath free_knot_interpolant(
    const PiecewiseLinearPath& path, const CrossingSkeleton& skeleton) {
  const double q = skeleton.width / 4.0;
  const double tol = 1e-9 * (1.0 + path.max_abs_value() + skeleton.width);
  if (skeleton.sigma.empty() ||
      skeleton.sigma.front() != path.times.front() ||
      skeleton.sigma.back() > path.times.back() + tol)
    throw std::invalid_argument("free_knot_interpolant: skeleton does not match path");

  if (skeleton.sigma.size() < 2) {
    return PiecewiseLinearPath({path.times.front(), path.times.back()},
                               {path.values.front(), path.values.front()});
  }
  std::vector<double> t = skeleton.sigma;
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) v[i] = path.value_at(t[i]);
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(std::abs(v[i] - v[i - 1]) - q) > tol)
      throw std::invalid_argument("free_knot_interpolant: skeleton does not match path");

  PiecewiseLinearPath interp(std::move(t), std::move(v));
  // containment check over the union of breakpoints (exact for PL paths)
  const double half = skeleton.width / 2.0;
  const auto& pt = path.times;
  const auto hi_end = std::upper_bound(pt.begin(), pt.end(), interp.times.back());
  for (auto it = pt.begin(); it != hi_end; ++it) {
    const std::size_t j = static_cast<std::size_t>(it - pt.begin());
    if (std::abs(interp.value_at(pt[j]) - path.values[j]) > half + tol)
      throw std::runtime_error("free_knot_interpolant: interpolant left the tube");
  }
  return interp;
}

}  // namespace tautband
