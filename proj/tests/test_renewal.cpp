#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tautband/extrema.hpp"
#include "tautband/oracle.hpp"
#include "tautband/renewal.hpp"
#include "tautband/rng.hpp"
#include "tautband/stats.hpp"

using namespace tautband;

namespace {

PiecewiseLinearPath tent_path() {
  std::vector<double> t, v;
  for (int i = 0; i <= 12; ++i) {
    const double x = 0.25 * i;
    t.push_back(x);
    v.push_back(x <= 1.5 ? x : 3.0 - x);
  }
  return PiecewiseLinearPath(t, v);
}

}  // namespace

TEST_CASE("first block of the tent path is a chord") {
  const auto w = tent_path();
  const auto d = decompose(w, 1.0);
  const auto psi = block_minimizer(w, d, 1);
  // pinned values 0.5 and 1.0 over a span of 1.5, so the chord has slope 1/3
  REQUIRE(psi.string.values.front() == Catch::Approx(0.5));
  REQUIRE(psi.string.values.back() == Catch::Approx(1.0));
  REQUIRE(energy(psi.string, PenaltySpec::quadratic()) ==
          Catch::Approx(1.0 / 6.0).margin(1e-12));
  for (std::size_t i = 0; i + 1 < psi.string.size(); ++i) {
    const double sl = (psi.string.values[i + 1] - psi.string.values[i]) /
                      (psi.string.times[i + 1] - psi.string.times[i]);
    REQUIRE(sl == Catch::Approx(1.0 / 3.0).margin(1e-12));
  }
  REQUIRE_THROWS_AS(block_minimizer(w, d, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(block_minimizer(w, d, 2), std::invalid_argument);
}

TEST_CASE("block minimizers match the oracle and their free-boundary variant") {
  // coarse grid keeps blocks small enough for the reference minimizer
  const auto w = generate_brownian(60.0, 0.05, 90210);
  const auto d = decompose(w, 2.0);
  REQUIRE(d.count >= 4);
  for (std::size_t i = 1; i + 1 <= std::min<std::size_t>(d.count, 4); ++i) {
    const auto psi = block_minimizer(w, d, i);
    if (psi.string.size() > 512) continue;
    const TubeProblem block(psi.path, 2.0, BoundaryCondition::free_free());
    const auto oracle_free = qp_oracle(block, PenaltySpec::quadratic(), 1e-11);
    REQUIRE(sup_distance(psi.string, oracle_free.string) <= 1e-6);

    // free-boundary solve lands on the pinned values
    const auto sweep_free = solve(block);
    REQUIRE(std::abs(sweep_free.string.values.front() -
                     psi.string.values.front()) <= 1e-6);
    REQUIRE(std::abs(sweep_free.string.values.back() -
                     psi.string.values.back()) <= 1e-6);
  }
}

TEST_CASE("renewal sampling basic contract") {
  const auto samples =
      sample_renewal(1.0, {PenaltySpec::quadratic()}, 3, 0.01, 5150);
  REQUIRE(samples.size() == 3);
  for (const auto& s : samples) {
    REQUIRE(s.tau > 0.0);
    REQUIRE(std::isfinite(s.energy_for(PenaltySpec::quadratic())));
    REQUIRE(s.energy_for(PenaltySpec::quadratic()) >= 0.0);
  }
  const auto again =
      sample_renewal(1.0, {PenaltySpec::quadratic()}, 3, 0.01, 5150);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    REQUIRE(samples[i].tau == again[i].tau);
    REQUIRE(samples[i].energies[0].second == again[i].energies[0].second);
  }
  REQUIRE_THROWS_AS(sample_renewal(1.0, {}, 0, 0.01, 1), std::invalid_argument);
}

TEST_CASE("estimator arithmetic on frozen samples") {
  std::vector<RenewalSample> flat(3);
  for (auto& s : flat) {
    s.tau = 1.0;
    s.energies = {{PenaltySpec::quadratic(), 2.0}};
  }
  const auto r0 = estimate(flat, PenaltySpec::quadratic());
  REQUIRE(r0.c_hat == Catch::Approx(2.0));
  REQUIRE(r0.sigma_hat_sq == Catch::Approx(0.0).margin(1e-15));

  std::vector<RenewalSample> two(2);
  two[0].tau = 1.0;
  two[0].energies = {{PenaltySpec::quadratic(), 2.0}};
  two[1].tau = 3.0;
  two[1].energies = {{PenaltySpec::quadratic(), 2.0}};
  const auto r1 = estimate(two, PenaltySpec::quadratic());
  REQUIRE(r1.mean_tau == Catch::Approx(2.0));
  REQUIRE(r1.mean_energy == Catch::Approx(2.0));
  REQUIRE(r1.c_hat == Catch::Approx(1.0));
  REQUIRE(r1.var_tau == Catch::Approx(2.0));
  REQUIRE(r1.var_energy == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(r1.cov == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(r1.sigma_hat_sq == Catch::Approx(1.0));

  REQUIRE_THROWS_AS(estimate({flat[0]}, PenaltySpec::quadratic()),
                    std::invalid_argument);
}

TEST_CASE("variance formula reproduces the stored moments identically") {
  const auto samples = sample_renewal(
      1.0, {PenaltySpec::quadratic()}, 200, 2e-3, 777);
  const auto r = estimate(samples, PenaltySpec::quadratic());
  const double expected =
      r.mean_energy * r.mean_energy / std::pow(r.mean_tau, 3) * r.var_tau +
      r.var_energy / r.mean_tau -
      2.0 * r.cov * r.mean_energy / (r.mean_tau * r.mean_tau);
  REQUIRE(r.sigma_hat_sq == expected);
  REQUIRE(r.standard_error_c ==
          Catch::Approx(std::sqrt(r.sigma_hat_sq /
                                  (static_cast<double>(r.n_samples) * r.mean_tau))));
}

TEST_CASE("estimates agree on disjoint halves") {
  const auto samples = sample_renewal(
      1.0, {PenaltySpec::quadratic()}, 600, 2e-3, 246810);
  const std::vector<RenewalSample> a(samples.begin(), samples.begin() + 300);
  const std::vector<RenewalSample> b(samples.begin() + 300, samples.end());
  const auto ra = estimate(a, PenaltySpec::quadratic());
  const auto rb = estimate(b, PenaltySpec::quadratic());
  const double combined = std::hypot(ra.standard_error_c, rb.standard_error_c);
  REQUIRE(std::abs(ra.c_hat - rb.c_hat) <= 3.0 * combined);
}

TEST_CASE("block durations and energy rates follow diffusive scaling") {
  const std::size_t blocks = 400;
  const auto s1 = sample_renewal(1.0, {PenaltySpec::quadratic()}, blocks,
                                 6.25e-4, 1111);
  const auto s2 = sample_renewal(2.0, {PenaltySpec::quadratic()}, blocks,
                                 2.5e-3, 2222);
  const auto r1 = estimate(s1, PenaltySpec::quadratic());
  const auto r2 = estimate(s2, PenaltySpec::quadratic());

  // tau scales like h^2
  const double se_tau1 = std::sqrt(r1.var_tau / static_cast<double>(blocks));
  const double se_tau2 = std::sqrt(r2.var_tau / static_cast<double>(blocks));
  const double ratio_se = std::hypot(se_tau1 / r2.mean_tau,
                                     r1.mean_tau * se_tau2 /
                                         (r2.mean_tau * r2.mean_tau));
  REQUIRE(std::abs(r1.mean_tau / r2.mean_tau - 0.25) <= 3.0 * ratio_se);

  // the energy rate scales like h^-2
  REQUIRE(std::abs(r1.c_hat - 4.0 * r2.c_hat) <=
          3.0 * std::hypot(r1.standard_error_c, 4.0 * r2.standard_error_c));
}

TEST_CASE("decomposition verification on short horizons") {
  std::vector<double> t{0.0, 0.5, 1.0};
  std::vector<double> v{0.0, 0.1, 0.0};
  const auto na = verify_decomposition(PiecewiseLinearPath(t, v), 1.0,
                                       {PenaltySpec::quadratic()}, 1e-6);
  REQUIRE_FALSE(na.applicable);

  const auto w = generate_brownian(60.0, 1e-3, 33);
  const auto rep = verify_decomposition(w, 1.0, {PenaltySpec::quadratic()}, 1e-6);
  REQUIRE(rep.applicable);
  REQUIRE(rep.n_extrema >= 4);
  REQUIRE(rep.pass);
  REQUIRE(rep.max_knot_residual <= 1e-6);
  REQUIRE_FALSE(rep.remainders.empty());
  REQUIRE(std::isfinite(rep.remainders[0].second));
}

TEST_CASE("free-knot interpolant dominates block minimizers") {
  for (std::uint64_t s = 0; s < 6; ++s) {
    const auto w = generate_brownian(25.0, 1e-3, fork_seed(606, 10, s));
    const double h = 1.0;
    const auto d = decompose(w, h);
    const auto sk = crossing_skeleton(w, h);
    if (d.count < 3 || sk.sigma.size() < 2) continue;
    const auto interp = free_knot_interpolant(w, sk);
    for (std::size_t i = 1; i + 1 <= std::min<std::size_t>(d.count, 5); ++i) {
      if (d.t_bar[i + 1] > interp.times.back()) break;
      if (d.t_bar[i] >= d.t_bar[i + 1]) continue;
      const auto psi = block_minimizer(w, d, i);
      const auto restricted = restrict_path(interp, d.t_bar[i], d.t_bar[i + 1]);
      for (const auto& c :
           {PenaltySpec::quadratic(), PenaltySpec::power(3.0), PenaltySpec::sqrt1p()})
        REQUIRE(energy(psi.string, c) <= energy(restricted, c) + 1e-9);
    }
  }
}

TEST_CASE("moment sanity: tails stay controlled as samples double") {
  const auto samples = sample_renewal(
      1.0, {PenaltySpec::quadratic()}, 800, 2e-3, 998877);
  std::vector<double> tau_half, tau_full, y_full;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    tau_full.push_back(samples[i].tau);
    y_full.push_back(samples[i].energy_for(PenaltySpec::quadratic()));
    if (i < samples.size() / 2) tau_half.push_back(samples[i].tau);
  }
  const auto sh = summarize(tau_half);
  const auto sf = summarize(tau_full);
  REQUIRE(std::isfinite(sf.excess_kurtosis));
  REQUIRE(sf.excess_kurtosis < 50.0);
  REQUIRE(summarize(y_full).excess_kurtosis < 100.0);
  // fourth-moment estimates stabilize: kurtosis of the halves stays in the
  // same ballpark rather than blowing up
  REQUIRE(std::abs(sf.excess_kurtosis - sh.excess_kurtosis) < 25.0);
}

TEST_CASE("clt statistics are defined even on tiny horizons") {
  const auto stats = clt_experiment(1.0, PenaltySpec::quadratic(), 2.0, 50,
                                    0.01, 13579, 200);
  REQUIRE(stats.size() == 50);
  for (double x : stats) REQUIRE(std::isfinite(x));
  REQUIRE_THROWS_AS(
      clt_experiment(1.0, PenaltySpec::quadratic(), 2.0, 10, 0.01, 1, 100),
      std::invalid_argument);
}

TEST_CASE("anscombe variance arithmetic and degeneracy") {
  AnscombeConfig cfg;
  cfg.law = AnscombeConfig::PairLaw::independent;
  cfg.tau_mean = 1.0;
  cfg.x_mean = 5.0;
  cfg.x_var = 1.0;
  cfg.horizon = 50.0;
  cfg.replicates = 60;
  cfg.seed = 7;
  const auto rep = anscombe_simulate(cfg);
  REQUIRE(rep.sigma_bar_sq == Catch::Approx(26.0));
  REQUIRE(rep.statistics.size() == 60);

  AnscombeConfig degenerate;
  degenerate.law = AnscombeConfig::PairLaw::linear_correlated;
  degenerate.rho = 1.0;   // X == tau identically
  degenerate.tau_mean = 1.0;
  degenerate.x_mean = 1.0;
  degenerate.x_var = 1.0;
  REQUIRE_THROWS_AS(anscombe_simulate(degenerate), DegenerateVarianceError);
}

TEST_CASE("anscombe statistics look standard normal") {
  AnscombeConfig cfg;
  cfg.horizon = 800.0;
  cfg.replicates = 300;
  cfg.seed = 424242;
  const auto rep = anscombe_simulate(cfg);
  REQUIRE(rep.ks.p_value > 0.01);
  const auto s = summarize(rep.statistics);
  REQUIRE(std::abs(s.mean) <= 3.0 / std::sqrt(300.0) * 1.5);
}

TEST_CASE("parallel replicates reproduce the serial run") {
  AnscombeConfig cfg;
  cfg.horizon = 200.0;
  cfg.replicates = 40;
  cfg.seed = 9;
  const auto serial = anscombe_simulate(cfg, 1);
  const auto threaded = anscombe_simulate(cfg, 4);
  REQUIRE(serial.statistics == threaded.statistics);
}
