#pragma once

// Randomized solver-vs-oracle campaigns shared by the command-line driver
// and the acceptance suite.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "tautband/oracle.hpp"
#include "tautband/path.hpp"
#include "tautband/rng.hpp"
#include "tautband/taut_string.hpp"

namespace tautband {

namespace detail {
inline constexpr std::uint64_t kDomainInstance = 0x696e7374ULL;  // "inst"
}

// Random tube instance on [0,1]: grid size in [16, max_grid], width in
// [0.3, 1.5], boundary mode cycling through fixed/free combinations.
// Free-free instances that admit a level line through the whole tube are
// redrawn: every fitting constant is minimal there, so solver and oracle
// could legitimately disagree.
inline TubeProblem random_tube_instance(std::uint64_t seed, std::uint64_t index,
                                        std::size_t max_grid = 64) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    CounterRng mix(fork_seed(seed, detail::kDomainInstance, index * 1024 + attempt));
    const std::size_t n =
        16 + static_cast<std::size_t>(mix.next_u64() % (max_grid - 15));
    const PiecewiseLinearPath w = generate_brownian(
        1.0, 1.0 / static_cast<double>(n - 1), mix.next_u64());
    const double h = 0.3 + 1.2 * mix.next_u01();
    BoundaryCondition bc;
    switch (index % 4) {
      case 0: bc = BoundaryCondition::fixed_to_path(w); break;
      case 1: bc = BoundaryCondition::free_free(); break;
      case 2: bc = {w.values.front(), std::nullopt}; break;
      default: bc = {std::nullopt, w.values.back()}; break;
    }
    if (!bc.left && !bc.right) {
      double band_lo = -1e300, band_hi = 1e300;
      for (std::size_t i = 0; i < w.size(); ++i) {
        band_lo = std::max(band_lo, w.values[i] - h / 2.0);
        band_hi = std::min(band_hi, w.values[i] + h / 2.0);
      }
      if (band_lo - band_hi <= 0.02 * h) continue;  // level line (nearly) fits
    }
    return TubeProblem(w, h, bc);
  }
}

struct OracleCheckReport {
  std::size_t instances = 0;
  double max_sup_distance = 0.0;
  double max_energy_gap = 0.0;
  std::size_t failures = 0;
  bool pass = false;
};

// Criterion-style sweep: solve each random instance with the sweep solver
// and the reference minimizer, compare sup-distance and quadratic energy.
inline OracleCheckReport oracle_check(std::size_t instances,
                                      std::size_t max_grid, std::uint64_t seed,
                                      double dist_tol = 1e-6,
                                      double energy_tol = 1e-8,
                                      double oracle_tol = 1e-10) {
  OracleCheckReport rep;
  rep.instances = instances;
  const auto quad = PenaltySpec::quadratic();
  for (std::uint64_t k = 0; k < instances; ++k) {
    const TubeProblem problem = random_tube_instance(seed, k, max_grid);
    const TautStringResult mine = solve(problem);
    const TautStringResult ref = qp_oracle(problem, quad, oracle_tol);
    const double dist = sup_distance(mine.string, ref.string);
    const double gap = energy(mine.string, quad) - energy(ref.string, quad);
    rep.max_sup_distance = std::max(rep.max_sup_distance, dist);
    rep.max_energy_gap = std::max(rep.max_energy_gap, gap);
    if (dist > dist_tol || gap > energy_tol) ++rep.failures;
  }
  rep.pass = rep.failures == 0;
  return rep;
}

struct InvarianceCheckReport {
  std::size_t instances = 0;
  double max_pairwise_distance = 0.0;
  std::size_t failures = 0;
  bool pass = false;
};

// Per-penalty oracle minimizers of the same instances, compared pairwise.
inline InvarianceCheckReport invariance_check(
    std::size_t instances, std::size_t max_grid, std::uint64_t seed,
    const std::vector<PenaltySpec>& penalties, double dist_tol = 1e-6,
    double oracle_tol = 1e-9) {
  InvarianceCheckReport rep;
  rep.instances = instances;
  for (std::uint64_t k = 0; k < instances; ++k) {
    const TubeProblem problem = random_tube_instance(seed, k, max_grid);
    const InvarianceReport r =
        verify_penalty_invariance(problem, penalties, dist_tol, oracle_tol);
    rep.max_pairwise_distance =
        std::max(rep.max_pairwise_distance, r.max_pairwise_distance);
    if (!r.pass) ++rep.failures;
  }
  rep.pass = rep.failures == 0;
  return rep;
}

}  // namespace tautband
