#pragma once

// Brute-force reference minimizer for small tube instances: projected Newton
// over the box [w_i - h/2, w_i + h/2] (fixed endpoints clamped), with the
// tridiagonal Hessian solved per contiguous free run and an Armijo
// backtracking line search along the projection arc. Newton steps are
// required here: the objective is flat to fourth order along level
// stretches of power-law penalties, so first-order steps cannot pin the
// minimizer position in double precision. Validation only; never used in
// production campaigns.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tautband/path.hpp"
#include "tautband/taut_string.hpp"

namespace tautband {

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct QpOracleStats {
  std::size_t iterations = 0;
  std::size_t backtracks = 0;
  std::size_t polish_steps = 0;  // accepted on gradient progress at flat objective
  double final_pg_norm = 0.0;
  double max_objective_increase = 0.0;  // worst uphill move over accepted steps
  bool monotone = true;     // strict non-increase; polish steps may wiggle by ulps
  bool feasible = true;     // every iterate inside the box
};

namespace detail {

inline double penalty_second_derivative(const PenaltySpec& c, double slope) {
  const double a = std::min(std::abs(slope), 1e150);
  switch (c.kind) {
    case PenaltyKind::quadratic:
      return 2.0;
    case PenaltyKind::power:
      return c.exponent * (c.exponent - 1.0) * std::pow(a, c.exponent - 2.0);
    case PenaltyKind::sqrt1p: {
      const double r = std::hypot(1.0, a);
      return 1.0 / (r * r * r);
    }
  }
  return 0.0;
}

inline double box_objective(const std::vector<double>& t,
                            const std::vector<double>& x,
                            const PenaltySpec& c) {
  double e = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double gap = t[i] - t[i - 1];
    e += c((x[i] - x[i - 1]) / gap) * gap;
  }
  return e;
}

inline void box_gradient(const std::vector<double>& t,
                         const std::vector<double>& x, const PenaltySpec& c,
                         std::vector<double>& g) {
  const std::size_t n = x.size();
  std::fill(g.begin(), g.end(), 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    const double gap = t[i] - t[i - 1];
    const double d = c.derivative((x[i] - x[i - 1]) / gap);
    g[i - 1] -= d;
    g[i] += d;
  }
}

// Solve (H + lambda I) d = -g on [a, b] where H is the tridiagonal Hessian
// restricted to a contiguous run of free coordinates. Returns false when a
// pivot degenerates despite the damping.
inline bool newton_run(const std::vector<double>& t,
                       const std::vector<double>& curv,  // c''(s_i)/gap_i
                       const std::vector<double>& g, std::size_t a,
                       std::size_t b, double lambda, std::vector<double>& d) {
  const std::size_t m = b - a + 1;
  static thread_local std::vector<double> diag, off, rhs;
  diag.assign(m, lambda);
  off.assign(m, 0.0);
  rhs.resize(m);
  for (std::size_t i = 0; i < m; ++i) rhs[i] = -g[a + i];
  for (std::size_t i = a; i < b; ++i) {
    diag[i - a] += curv[i];
    diag[i - a + 1] += curv[i];
    off[i - a] = -curv[i];
  }
  if (a > 0) diag[0] += curv[a - 1];
  if (b + 1 < t.size()) diag[m - 1] += curv[b];
  for (std::size_t i = 1; i < m; ++i) {
    if (!(diag[i - 1] > 0.0)) return false;
    const double w = off[i - 1] / diag[i - 1];
    diag[i] -= w * off[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  if (!(diag[m - 1] > 0.0)) return false;
  d[b] = rhs[m - 1] / diag[m - 1];
  for (std::size_t i = m - 1; i-- > 0;)
    d[a + i] = (rhs[i] - off[i] * d[a + i + 1]) / diag[i];
  return true;
}

}  // namespace detail

// Minimize sum c(slope_i) * gap_i over the tube box, iterating until the
// projected-gradient norm drops below `tolerance`. Deterministic; grids
// above 512 points are rejected.
inline TautStringResult qp_oracle(const TubeProblem& problem,
                                  const PenaltySpec& penalty, double tolerance,
                                  QpOracleStats* stats = nullptr) {
  const auto& w = problem.path;
  const std::size_t n = w.size();
  if (n > 512)
    throw std::invalid_argument("qp_oracle: grid larger than 512 points is unsupported");
  if (!(tolerance > 0.0))
    throw std::invalid_argument("qp_oracle: tolerance must be > 0");

  const double half = problem.width / 2.0;
  std::vector<double> lo(n), hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = w.values[i] - half;
    hi[i] = w.values[i] + half;
  }
  if (problem.boundary.left) {
    const double v = std::clamp(*problem.boundary.left, lo[0], hi[0]);
    lo[0] = hi[0] = v;
  }
  if (problem.boundary.right) {
    const double v = std::clamp(*problem.boundary.right, lo[n - 1], hi[n - 1]);
    lo[n - 1] = hi[n - 1] = v;
  }

  // Start at the clamped tube midpoint (the path itself), always feasible.
  std::vector<double> x(w.values);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);

  const auto& t = w.times;
  std::vector<double> g(n), g2(n), d(n), curv(n, 0.0), trial(n);
  double fx = detail::box_objective(t, x, penalty);

  QpOracleStats local;
  QpOracleStats& st = stats ? *stats : local;
  st = QpOracleStats{};

  constexpr double kArmijo = 1e-4;
  constexpr double kShrink = 0.5;
  constexpr std::size_t kMaxIters = 200'000;
  constexpr std::size_t kRefineCap = 5'000;
  constexpr double kUlp = 2.220446049250313e-16;
  const double band = 1e-14 * (1.0 + w.max_abs_value() + problem.width);

  auto pg_norm = [&](const std::vector<double>& z,
                     const std::vector<double>& grad) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double proj = std::clamp(z[i] - grad[i], lo[i], hi[i]);
      const double diff = z[i] - proj;
      s += diff * diff;
    }
    return std::sqrt(s);
  };

  // Newton direction on the runs of free coordinates; falls back to the
  // projected-gradient direction when the model is not a descent direction.
  auto newton_direction = [&]() {
    std::vector<char> free_coord(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const bool at_lo = x[i] <= lo[i] + band;
      const bool at_hi = x[i] >= hi[i] - band;
      free_coord[i] = !((at_lo && g[i] > 0.0) || (at_hi && g[i] < 0.0));
      if (lo[i] == hi[i]) free_coord[i] = 0;
    }
    double max_curv = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      const double gap = t[i] - t[i - 1];
      curv[i - 1] =
          detail::penalty_second_derivative(penalty, (x[i] - x[i - 1]) / gap) /
          gap;
      max_curv = std::max(max_curv, curv[i - 1]);
    }
    std::fill(d.begin(), d.end(), 0.0);
    for (std::size_t a = 0; a < n;) {
      if (!free_coord[a]) {
        ++a;
        continue;
      }
      std::size_t b = a;
      while (b + 1 < n && free_coord[b + 1]) ++b;
      double lam = 1e-12 * std::max(1.0, max_curv);
      while (!detail::newton_run(t, curv, g, a, b, lam, d)) lam *= 100.0;
      a = b + 1;
    }
    double slope_along = 0.0;
    for (std::size_t i = 0; i < n; ++i) slope_along += g[i] * d[i];
    if (!(slope_along < 0.0))
      for (std::size_t i = 0; i < n; ++i) d[i] = free_coord[i] ? -g[i] : 0.0;
  };

  // Phase 1: descend until the projected-gradient norm meets the tolerance.
  bool stalled = false;
  for (st.iterations = 0; st.iterations < kMaxIters; ++st.iterations) {
    detail::box_gradient(t, x, penalty, g);
    st.final_pg_norm = pg_norm(x, g);
    if (st.final_pg_norm <= tolerance || stalled) break;

    newton_direction();
    const double eps_f = 8.0 * kUlp * (1.0 + std::abs(fx));
    double step = 1.0;
    bool accepted = false;
    while (step > 1e-18) {
      double decrease = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        trial[i] = std::clamp(x[i] + step * d[i], lo[i], hi[i]);
        decrease += g[i] * (x[i] - trial[i]);
      }
      const double ft = detail::box_objective(t, trial, penalty);
      if (ft <= fx - kArmijo * decrease && decrease > 0.0) {
        if (ft > fx) {
          st.monotone = false;
          st.max_objective_increase = std::max(st.max_objective_increase, ft - fx);
        }
        x.swap(trial);
        fx = ft;
        accepted = true;
        break;
      }
      // Near the floor of representable objective changes the Armijo test
      // goes blind: a power penalty's quartic valley moves the iterate by
      // 1e-4 while the objective moves by 1e-28. Accept the full step on
      // projected-gradient progress instead.
      if (step == 1.0 && ft <= fx + eps_f) {
        detail::box_gradient(t, trial, penalty, g2);
        if (pg_norm(trial, g2) <= 0.99 * st.final_pg_norm) {
          x.swap(trial);
          fx = detail::box_objective(t, x, penalty);
          accepted = true;
          ++st.polish_steps;
          break;
        }
      }
      step *= kShrink;
      ++st.backtracks;
    }
    if (!accepted) stalled = true;  // no representable progress in any direction
  }
  if (st.final_pg_norm > tolerance)
    throw ConvergenceError("qp_oracle: no convergence (pg norm " +
                           std::to_string(st.final_pg_norm) + " > tolerance after " +
                           std::to_string(st.iterations) + " iterations)");

  // Phase 2: a single projected-gradient threshold cannot express the
  // position accuracy of soft (power-law) valleys whose gradients live far
  // below the noise floor of the steep coordinates. Keep taking full Newton
  // steps while they stay objective-neutral, until the step itself
  // underflows; this pins positions to machine precision.
  double xscale = 1.0;
  for (std::size_t i = 0; i < n; ++i) xscale = std::max(xscale, std::abs(x[i]));
  for (std::size_t r = 0; r < kRefineCap; ++r) {
    detail::box_gradient(t, x, penalty, g);
    newton_direction();
    double dmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) dmax = std::max(dmax, std::abs(d[i]));
    if (dmax <= 1e-14 * xscale) break;
    const double eps_f = 8.0 * kUlp * (1.0 + std::abs(fx));
    for (std::size_t i = 0; i < n; ++i)
      trial[i] = std::clamp(x[i] + d[i], lo[i], hi[i]);
    const double ft = detail::box_objective(t, trial, penalty);
    if (!(ft <= fx + eps_f)) break;
    if (ft > fx) {
      st.monotone = false;
      st.max_objective_increase = std::max(st.max_objective_increase, ft - fx);
    }
    x.swap(trial);
    fx = ft;
    ++st.polish_steps;
  }
  detail::box_gradient(t, x, penalty, g);
  st.final_pg_norm = std::min(st.final_pg_norm, pg_norm(x, g));

  for (std::size_t i = 0; i < n; ++i)
    if (x[i] < lo[i] || x[i] > hi[i]) st.feasible = false;

  TautStringResult r;
  r.string = PiecewiseLinearPath(t, std::move(x));
  r.knots = detail::scan_knots(w, half, r.string.values,
                               default_knot_tolerance(w));
  r.energies.emplace_back(PenaltySpec::quadratic(),
                          energy(r.string, PenaltySpec::quadratic()));
  if (!(penalty == PenaltySpec::quadratic()))
    r.energies.emplace_back(penalty, energy(r.string, penalty));
  r.boundary_values = {r.string.values.front(), r.string.values.back()};
  r.path = w;
  r.width = problem.width;
  return r;
}

struct InvarianceReport {
  double max_pairwise_distance = 0.0;
  bool pass = false;
  std::vector<std::pair<PenaltySpec, double>> solver_vs_oracle;
};

// Solve the tube problem once (the sweep is penalty-free by construction)
// and cross-check against independent oracle minimizers for each penalty;
// the report carries the largest pairwise sup-distance over all minimizers.
inline InvarianceReport verify_penalty_invariance(
    const TubeProblem& problem, const std::vector<PenaltySpec>& penalties,
    double tolerance, double oracle_tolerance = 1e-10) {
  for (const auto& c : penalties)
    if (c.kind == PenaltyKind::power && !(c.exponent > 1.0))
      throw std::invalid_argument("verify_penalty_invariance: penalty not strictly convex");

  std::vector<PiecewiseLinearPath> minimizers;
  const TautStringResult base = solve(problem);
  minimizers.push_back(base.string);

  InvarianceReport rep;
  for (const auto& c : penalties) {
    TautStringResult o = qp_oracle(problem, c, oracle_tolerance);
    rep.solver_vs_oracle.emplace_back(c, sup_distance(base.string, o.string));
    minimizers.push_back(std::move(o.string));
  }
  for (std::size_t a = 0; a < minimizers.size(); ++a)
    for (std::size_t b = a + 1; b < minimizers.size(); ++b)
      rep.max_pairwise_distance = std::max(
          rep.max_pairwise_distance, sup_distance(minimizers[a], minimizers[b]));
  rep.pass = rep.max_pairwise_distance <= tolerance;
  return rep;
}

}  // namespace tautband
