#pragma once

// Tube-constrained convex minimization on a grid: the taut string. A single
// left-to-right sweep maintains the greatest convex minorant of the upper
// tube boundary and the least concave majorant of the lower one; a knot is
// committed whenever the two hulls force a crossing. The resulting polyline
// simultaneously minimizes sum c(slope_i) * gap_i over the tube for every
// convex penalty c.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tautband/path.hpp"

namespace tautband {

enum class KnotSide { upper, lower };

struct Knot {
  std::size_t index;
  KnotSide side;
};

// Per-endpoint boundary handling: nullopt means free, a value means the
// string is pinned there.
struct BoundaryCondition {
  std::optional<double> left;
  std::optional<double> right;

  static BoundaryCondition fixed(double l, double r) { return {l, r}; }
  static BoundaryCondition free_free() { return {std::nullopt, std::nullopt}; }
  static BoundaryCondition fixed_to_path(const PiecewiseLinearPath& w) {
    return {w.values.front(), w.values.back()};
  }
};

struct TubeProblem {
  PiecewiseLinearPath path;
  double width = 1.0;  // h
  BoundaryCondition boundary;

  TubeProblem(PiecewiseLinearPath w, double h, BoundaryCondition bc)
      : path(std::move(w)), width(h), boundary(bc) {
    if (!(width > 0.0)) throw std::invalid_argument("TubeProblem: width must be > 0");
    const double half = width / 2.0;
    const double slack = 1e-9 * (1.0 + path.max_abs_value()) + 1e-12 * width;
    if (boundary.left &&
        std::abs(*boundary.left - path.values.front()) > half + slack)
      throw std::invalid_argument("TubeProblem: left boundary value outside the tube");
    if (boundary.right &&
        std::abs(*boundary.right - path.values.back()) > half + slack)
      throw std::invalid_argument("TubeProblem: right boundary value outside the tube");
  }
};

struct TautStringResult {
  PiecewiseLinearPath string;
  std::vector<Knot> knots;
  std::vector<std::pair<PenaltySpec, double>> energies;
  std::pair<double, double> boundary_values{0.0, 0.0};
  PiecewiseLinearPath path;  // driving path w, kept for serialization and re-scans
  double width = 0.0;

  double energy_for(const PenaltySpec& c) const {
    for (const auto& [p, e] : energies)
      if (p == c) return e;
    return energy(string, c);
  }
};

inline double default_knot_tolerance(const PiecewiseLinearPath& w) {
  return 1e-9 * (1.0 + w.max_abs_value());
}

namespace detail {

struct FPoint {
  double t;
  double y;
  std::size_t idx;
};

// sign of slope(a,b) - slope(b,c); time gaps are positive.
inline double hull_cross(const FPoint& a, const FPoint& b, const FPoint& c) {
  return (b.y - a.y) * (c.t - b.t) - (c.y - b.y) * (b.t - a.t);
}

// sign of slope(a,x) - slope(a,y)
inline double wedge_cross(const FPoint& a, const FPoint& x, const FPoint& y) {
  return (x.y - a.y) * (y.t - a.t) - (y.y - a.y) * (x.t - a.t);
}

// Taut polyline through the gates [w_i - half, w_i + half], starting at the
// fixed value y0; the right end is pinned to *yend or left free. Returns the
// polyline's vertices as (grid index, value), strictly increasing in index.
inline std::vector<std::pair<std::size_t, double>> taut_fixed_left(
    const std::vector<double>& t, const std::vector<double>& w, double half,
    double y0, const std::optional<double>& yend) {
  const std::size_t n = t.size();
  std::vector<std::pair<std::size_t, double>> verts;
  verts.reserve(16);
  FPoint apex{t[0], y0, 0};
  verts.emplace_back(0, y0);
  std::deque<FPoint> cu, cl;

  auto commit = [&](const FPoint& p) {
    apex = p;
    verts.emplace_back(p.idx, p.y);
  };

  auto add_ceiling = [&](FPoint p) {
    while (!cu.empty()) {
      const FPoint& back = cu.back();
      const FPoint& prev = cu.size() >= 2 ? cu[cu.size() - 2] : apex;
      if (hull_cross(prev, back, p) >= 0.0)
        cu.pop_back();
      else
        break;
    }
    if (cu.empty()) {
      while (!cl.empty() && wedge_cross(apex, p, cl.front()) < 0.0) {
        commit(cl.front());
        cl.pop_front();
      }
    }
    cu.push_back(p);
  };

  auto add_floor = [&](FPoint q) {
    while (!cl.empty()) {
      const FPoint& back = cl.back();
      const FPoint& prev = cl.size() >= 2 ? cl[cl.size() - 2] : apex;
      if (hull_cross(prev, back, q) <= 0.0)
        cl.pop_back();
      else
        break;
    }
    if (cl.empty()) {
      while (!cu.empty() && wedge_cross(apex, q, cu.front()) > 0.0) {
        commit(cu.front());
        cu.pop_front();
      }
    }
    cl.push_back(q);
  };

  for (std::size_t k = 1; k < n; ++k) {
    add_ceiling({t[k], w[k] + half, k});
    add_floor({t[k], w[k] - half, k});
  }

  auto purge_behind_apex = [&](std::deque<FPoint>& chain) {
    while (!chain.empty() && chain.front().t <= apex.t) chain.pop_front();
  };

  if (yend) {
    const FPoint end{t[n - 1], *yend, n - 1};
    for (;;) {
      if (!cu.empty() && wedge_cross(apex, cu.front(), end) < 0.0) {
        commit(cu.front());
        cu.pop_front();
        purge_behind_apex(cl);
        continue;
      }
      if (!cl.empty() && wedge_cross(apex, cl.front(), end) > 0.0) {
        commit(cl.front());
        cl.pop_front();
        purge_behind_apex(cu);
        continue;
      }
      break;
    }
    if (verts.back().first != n - 1) verts.emplace_back(n - 1, *yend);
  } else {
    // Free right end: wrap until a level segment from the apex threads the
    // remaining funnel, then run flat. Flat is optimal among admissible
    // tails because every penalty attains its minimum at slope zero.
    for (;;) {
      if (!cu.empty() && cu.front().y < apex.y) {
        commit(cu.front());
        cu.pop_front();
        purge_behind_apex(cl);
        continue;
      }
      if (!cl.empty() && cl.front().y > apex.y) {
        commit(cl.front());
        cl.pop_front();
        purge_behind_apex(cu);
        continue;
      }
      break;
    }
    if (verts.back().first != n - 1) verts.emplace_back(n - 1, apex.y);
  }
  return verts;
}

inline std::vector<double> polyline_values(
    const std::vector<double>& t,
    const std::vector<std::pair<std::size_t, double>>& verts) {
  std::vector<double> phi(t.size());
  for (std::size_t v = 0; v + 1 < verts.size(); ++v) {
    const auto [i1, y1] = verts[v];
    const auto [i2, y2] = verts[v + 1];
    const double slope = (y2 - y1) / (t[i2] - t[i1]);
    phi[i1] = y1;
    for (std::size_t j = i1 + 1; j < i2; ++j)
      phi[j] = y1 + slope * (t[j] - t[i1]);
    phi[i2] = y2;
  }
  return phi;
}

inline std::vector<double> solve_fixed_left(const std::vector<double>& t,
                                            const std::vector<double>& w,
                                            double half, double y0,
                                            const std::optional<double>& yend) {
  return polyline_values(t, taut_fixed_left(t, w, half, y0, yend));
}

// Free left end: solve the time-reversed problem, which has a fixed (or
// free) left end, and flip back. The taut string's structural
// characterization is symmetric under time reversal.
inline std::vector<double> solve_free_left_fixed_right(
    const std::vector<double>& t, const std::vector<double>& w, double half,
    double yright) {
  const std::size_t n = t.size();
  std::vector<double> tr(n), wr(n);
  const double tend = t[n - 1];
  for (std::size_t j = 0; j < n; ++j) {
    tr[j] = tend - t[n - 1 - j];
    wr[j] = w[n - 1 - j];
  }
  std::vector<double> pr = solve_fixed_left(tr, wr, half, yright, std::nullopt);
  std::vector<double> phi(n);
  for (std::size_t j = 0; j < n; ++j) phi[j] = pr[n - 1 - j];
  return phi;
}

inline std::vector<double> solve_values(const std::vector<double>& t,
                                        const std::vector<double>& w,
                                        double half,
                                        const std::optional<double>& left,
                                        const std::optional<double>& right) {
  const std::size_t n = t.size();
  if (left) return solve_fixed_left(t, w, half, *left, right);
  if (right) return solve_free_left_fixed_right(t, w, half, *right);

  // Both ends free. If some level line fits the whole tube, any such line is
  // minimal; we pick the middle of the admissible band. Otherwise the
  // solutions started from the two extreme admissible left values must merge
  // (comparison principle); past the merge they coincide with the free-free
  // solution, and before it the problem reduces to a fixed-right sub-solve.
  double band_lo = w[0] - half, band_hi = w[0] + half;
  for (std::size_t i = 1; i < n; ++i) {
    band_lo = std::max(band_lo, w[i] - half);
    band_hi = std::min(band_hi, w[i] + half);
  }
  if (band_lo <= band_hi) {
    return std::vector<double>(n, 0.5 * (band_lo + band_hi));
  }

  const std::vector<double> hi =
      solve_fixed_left(t, w, half, w[0] + half, std::nullopt);
  const std::vector<double> lo =
      solve_fixed_left(t, w, half, w[0] - half, std::nullopt);
  double scale = 1.0;
  for (double x : w) scale = std::max(scale, std::abs(x));
  scale += half;
  std::size_t meet = n;
  std::size_t best = 0;
  double best_gap = hi[0] - lo[0];
  for (std::size_t k = 0; k < n; ++k) {
    const double gap = hi[k] - lo[k];
    if (gap < best_gap) {
      best_gap = gap;
      best = k;
    }
    if (gap <= 1e-11 * scale) {
      meet = k;
      break;
    }
  }
  if (meet == n) {
    if (best_gap > 1e-6 * scale)
      throw std::logic_error("taut string: free-boundary envelopes failed to merge");
    meet = best;
  }
  const double v = 0.5 * (hi[meet] + lo[meet]);

  std::vector<double> phi(n);
  if (meet > 0) {
    std::vector<double> tl(t.begin(), t.begin() + meet + 1);
    std::vector<double> wl(w.begin(), w.begin() + meet + 1);
    std::vector<double> left_part = solve_free_left_fixed_right(tl, wl, half, v);
    std::copy(left_part.begin(), left_part.end(), phi.begin());
  }
  phi[meet] = v;
  if (meet + 1 < n) {
    std::vector<double> tright(t.begin() + meet, t.end());
    std::vector<double> wright(w.begin() + meet, w.end());
    std::vector<double> right_part =
        solve_fixed_left(tright, wright, half, v, std::nullopt);
    std::copy(right_part.begin(), right_part.end(), phi.begin() + meet);
  }
  return phi;
}

inline std::vector<Knot> scan_knots(const PiecewiseLinearPath& w, double half,
                                    const std::vector<double>& phi,
                                    double tol) {
  std::vector<Knot> knots;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double du = std::abs(phi[i] - (w.values[i] + half));
    const double dl = std::abs(phi[i] - (w.values[i] - half));
    if (std::min(du, dl) <= tol)
      knots.push_back({i, du <= dl ? KnotSide::upper : KnotSide::lower});
  }
  return knots;
}

}  // namespace detail

// Solve the tube problem. The output string lives on the input grid; knots
// are every grid point in contact with a tube boundary at the default
// tolerance, and the quadratic energy is precomputed.
inline TautStringResult solve(const TubeProblem& problem) {
  const auto& w = problem.path;
  const double half = problem.width / 2.0;
  std::vector<double> phi = detail::solve_values(
      w.times, w.values, half, problem.boundary.left, problem.boundary.right);

  TautStringResult r;
  r.string = PiecewiseLinearPath(w.times, std::move(phi));
  r.knots = detail::scan_knots(w, half, r.string.values,
                               default_knot_tolerance(w));
  r.energies.emplace_back(PenaltySpec::quadratic(),
                          energy(r.string, PenaltySpec::quadratic()));
  r.boundary_values = {r.string.values.front(), r.string.values.back()};
  r.path = w;
  r.width = problem.width;
  return r;
}

// Re-scan a solved string for boundary contacts at a caller-chosen tolerance.
inline std::vector<Knot> knot_points(const TautStringResult& result,
                                     double tolerance) {
  if (tolerance < 0.0)
    throw std::invalid_argument("knot_points: tolerance must be >= 0");
  return detail::scan_knots(result.path, result.width / 2.0,
                            result.string.values, tolerance);
}

}  // namespace tautband
