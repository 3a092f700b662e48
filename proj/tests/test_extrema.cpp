#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tautband/extrema.hpp"
#include "tautband/path.hpp"
#include "tautband/rng.hpp"

using namespace tautband;

namespace {

PiecewiseLinearPath tent_path() {
  // rises with slope 1 to 1.5, falls with slope -1 until t = 3
  std::vector<double> t, v;
  for (int i = 0; i <= 12; ++i) {
    const double x = 0.25 * i;
    t.push_back(x);
    v.push_back(x <= 1.5 ? x : 3.0 - x);
  }
  return PiecewiseLinearPath(t, v);
}

}  // namespace

TEST_CASE("tent path decomposition by direct evaluation") {
  const auto d = decompose(tent_path(), 1.0);
  REQUIRE(d.count == 2);
  REQUIRE(d.t[0] == 0.0);
  REQUIRE(d.t_bar[0] == 0.0);
  REQUIRE(d.t[1] == Catch::Approx(1.0));
  REQUIRE(d.t_bar[1] == Catch::Approx(0.0));
  REQUIRE(d.t[2] == Catch::Approx(2.5));
  REQUIRE(d.t_bar[2] == Catch::Approx(1.5));
  REQUIRE(d.extremum_values[1] == Catch::Approx(0.0));
  REQUIRE(d.extremum_values[2] == Catch::Approx(1.5));
}

TEST_CASE("a shallow ramp has no crossings") {
  std::vector<double> t{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> v;
  for (double x : t) v.push_back(0.5 * x);
  const auto d = decompose(PiecewiseLinearPath(t, v), 1.0);
  REQUIRE(d.count == 0);
  REQUIRE_THROWS_AS(decompose(PiecewiseLinearPath(t, v), 0.0),
                    std::invalid_argument);
}

TEST_CASE("interleaving and height gaps on Brownian paths") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto w = generate_brownian(40.0, 0.005, fork_seed(42, 3, s));
    const double h = 1.0;
    const auto d = decompose(w, h);
    const double tol = 1e-9 * (1.0 + w.max_abs_value());
    for (std::size_t n = 0; n + 1 < d.t.size(); ++n) {
      REQUIRE(d.t[n] <= d.t_bar[n + 1] + tol);
      REQUIRE(d.t_bar[n + 1] <= d.t[n + 1] + tol);
    }
    for (std::size_t n = 1; n < d.t.size(); ++n) {
      const double diff = w.value_at(d.t[n]) - d.extremum_values[n];
      const double expect = (n % 2 == 1) ? h : -h;
      REQUIRE(diff == Catch::Approx(expect).margin(tol));
    }
  }
}

TEST_CASE("diffusive rescaling scales the decomposition exactly") {
  const auto w = generate_brownian(20.0, 0.01, 8);
  const double lam = 2.0;  // power of two keeps the arithmetic exact
  std::vector<double> t(w.size()), v(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    t[i] = w.times[i] * (lam * lam);
    v[i] = w.values[i] * lam;
  }
  const auto base = decompose(w, 1.0);
  const auto scaled = decompose(PiecewiseLinearPath(t, v), lam * 1.0);
  REQUIRE(scaled.count == base.count);
  for (std::size_t n = 0; n < base.t.size(); ++n) {
    REQUIRE(scaled.t[n] == base.t[n] * (lam * lam));
    REQUIRE(scaled.t_bar[n] == base.t_bar[n] * (lam * lam));
  }
}

TEST_CASE("crossing skeleton of a steady ramp") {
  std::vector<double> t;
  for (int i = 0; i <= 5; ++i) t.push_back(0.25 * i);
  std::vector<double> v(t);  // w(t) = t on [0, 1.25]
  const auto s = crossing_skeleton(PiecewiseLinearPath(t, v), 1.0);
  REQUIRE(s.sigma.size() == 6);
  for (std::size_t i = 0; i < s.sigma.size(); ++i)
    REQUIRE(s.sigma[i] == Catch::Approx(0.25 * static_cast<double>(i)));
  for (int d : s.delta) REQUIRE(d == 1);
  REQUIRE(s.n_k.size() == 1);
  REQUIRE(s.n_k[0] == 1);
}

TEST_CASE("flat path has a bare skeleton") {
  const PiecewiseLinearPath w({0.0, 0.5, 1.0}, {0.0, 0.0, 0.0});
  const auto s = crossing_skeleton(w, 1.0);
  REQUIRE(s.sigma.size() == 1);
  REQUIRE(s.delta.empty());
  REQUIRE(s.n_k.empty());
}

TEST_CASE("free-knot interpolant on collinear knots reproduces the path") {
  std::vector<double> t;
  for (int i = 0; i <= 8; ++i) t.push_back(0.125 * i);
  const PiecewiseLinearPath w(t, t);
  const auto s = crossing_skeleton(w, 1.0);
  const auto f = free_knot_interpolant(w, s);
  for (std::size_t i = 0; i < f.size(); ++i)
    REQUIRE(f.values[i] == Catch::Approx(f.times[i]));

  const PiecewiseLinearPath flat({0.0, 1.0}, {0.25, 0.25});
  const auto fs = crossing_skeleton(flat, 1.0);
  const auto g = free_knot_interpolant(flat, fs);
  REQUIRE(g.size() == 2);
  REQUIRE(g.values[0] == 0.25);
  REQUIRE(g.values[1] == 0.25);
}

TEST_CASE("free-knot interpolant stays within half the width") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto w = generate_brownian(10.0, 0.002, fork_seed(9, 4, s));
    const auto sk = crossing_skeleton(w, 0.8);
    const auto f = free_knot_interpolant(w, sk);  // containment checked inside
    REQUIRE(f.size() == sk.sigma.size());
  }
  const auto w = generate_brownian(5.0, 0.01, 17);
  const auto sk = crossing_skeleton(w, 1.0);
  CrossingSkeleton other = sk;
  if (other.sigma.size() > 2) other.sigma[1] *= 0.5;  // break the level steps
  REQUIRE_THROWS_AS(free_knot_interpolant(w, other), std::invalid_argument);
}

TEST_CASE("skeleton gap means agree across two resolutions") {
  // first-exit gaps of the quarter-width skeleton have the same mean at two
  // grid resolutions, within Monte Carlo error
  auto harvest = [](double dt, std::uint64_t seed) {
    std::vector<double> gaps;
    for (std::uint64_t s = 0; s < 12; ++s) {
      const auto w = generate_brownian(20.0, dt, fork_seed(seed, 5, s));
      const auto sk = crossing_skeleton(w, 1.0);
      for (std::size_t i = 1; i < sk.sigma.size(); ++i)
        gaps.push_back(sk.sigma[i] - sk.sigma[i - 1]);
    }
    return gaps;
  };
  const auto coarse = harvest(2e-4, 101);
  const auto fine = harvest(1e-4, 202);
  auto mean_se = [](const std::vector<double>& xs) {
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double s2 = 0.0;
    for (double x : xs) s2 += (x - m) * (x - m);
    s2 /= static_cast<double>(xs.size() - 1);
    return std::pair<double, double>(m, std::sqrt(s2 / static_cast<double>(xs.size())));
  };
  const auto [m1, se1] = mean_se(coarse);
  const auto [m2, se2] = mean_se(fine);
  REQUIRE(std::abs(m1 - m2) <= 3.0 * std::sqrt(se1 * se1 + se2 * se2));
}

TEST_CASE("renewal consistency of the extrema counter") {
  // N(T) * mean block gap / T concentrates near one
  std::vector<double> gaps;
  std::vector<double> counts, horizons;
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto w = generate_brownian(300.0, 2e-3, fork_seed(31337, 6, s));
    const auto d = decompose(w, 1.0);
    REQUIRE(d.count >= 4);
    for (std::size_t n = 2; n < d.t_bar.size(); ++n)
      gaps.push_back(d.t_bar[n] - d.t_bar[n - 1]);
    counts.push_back(static_cast<double>(d.count));
    horizons.push_back(300.0);
  }
  double gbar = 0.0;
  for (double g : gaps) gbar += g;
  gbar /= static_cast<double>(gaps.size());
  std::vector<double> ratio;
  for (std::size_t i = 0; i < counts.size(); ++i)
    ratio.push_back(counts[i] * gbar / horizons[i]);
  double m = 0.0, s2 = 0.0;
  for (double r : ratio) m += r;
  m /= static_cast<double>(ratio.size());
  for (double r : ratio) s2 += (r - m) * (r - m);
  s2 /= static_cast<double>(ratio.size() - 1);
  const double se = std::sqrt(s2 / static_cast<double>(ratio.size()));
  REQUIRE(std::abs(m - 1.0) <= 3.0 * se + 0.02);
}

TEST_CASE("structural inequality linking extrema and skeleton") {
  // t_bar_2 - t_bar_1 never exceeds sigma_{4 n_2}
  std::size_t checked = 0;
  for (std::uint64_t s = 0; s < 60; ++s) {
    const auto w = generate_brownian(30.0, 1e-3, fork_seed(2025, 8, s));
    const auto d = decompose(w, 1.0);
    const auto sk = crossing_skeleton(w, 1.0);
    if (d.count < 2 || sk.n_k.size() < 2) continue;
    const std::size_t idx = 4 * sk.n_k[1];
    if (idx >= sk.sigma.size()) continue;
    REQUIRE(d.t_bar[2] - d.t_bar[1] <= sk.sigma[idx] + 1e-12);
    ++checked;
  }
  REQUIRE(checked >= 30);
}

TEST_CASE("skeleton sign labels avoid mismatched extrema intervals") {
  // a down-labelled sigma_{4 n_k} never lands in an interval that starts at
  // an h-minimum, and symmetrically for up labels
  for (std::uint64_t s = 0; s < 25; ++s) {
    const auto w = generate_brownian(30.0, 1e-3, fork_seed(4040, 9, s));
    const auto d = decompose(w, 1.0);
    const auto sk = crossing_skeleton(w, 1.0);
    for (std::size_t k = 0; k < sk.n_k.size(); ++k) {
      const std::size_t idx = 4 * sk.n_k[k];
      if (idx >= sk.sigma.size()) continue;
      const double sigma = sk.sigma[idx];
      const int sign = sk.delta[idx - 1];
      for (std::size_t i = 1; i + 1 < d.t_bar.size(); ++i) {
        if (sigma >= d.t_bar[i] && sigma < d.t_bar[i + 1]) {
          if (sign < 0)
            REQUIRE(i % 2 == 0);
          else
            REQUIRE(i % 2 == 1);
        }
      }
    }
  }
}
