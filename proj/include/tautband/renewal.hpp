#pragma once

// Renewal structure of the taut string: block minimizers pinned to the tube
// boundary at consecutive extremum locations, i.i.d. sampling of block
// durations and energies, the long-run energy-rate estimator with its CLT
// variance, and a randomly-indexed-sum CLT simulator for synthetic pair
// laws.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tautband/extrema.hpp"
#include "tautband/parallel.hpp"
#include "tautband/path.hpp"
#include "tautband/rng.hpp"
#include "tautband/stats.hpp"
#include "tautband/taut_string.hpp"

namespace tautband {

struct DegenerateVarianceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
inline constexpr std::uint64_t kDomainCalibration = 0x63616c6962ULL;  // "calib"
inline constexpr std::uint64_t kDomainReplicate = 0x7265706cULL;      // "repl"
inline constexpr std::uint64_t kDomainPairs = 0x7061697273ULL;        // "pairs"
}  // namespace detail

// One (tau, energy) observation: the duration of a double block and the
// penalty energies spent by the two block minimizers inside it.
struct RenewalSample {
  double tau = 0.0;
  std::vector<std::pair<PenaltySpec, double>> energies;

  double energy_for(const PenaltySpec& c) const {
    for (const auto& [p, e] : energies)
      if (p == c) return e;
    throw std::invalid_argument("RenewalSample: penalty not sampled");
  }
};

struct EstimatorReport {
  PenaltySpec penalty;
  std::size_t n_samples = 0;
  double mean_tau = 0.0;
  double mean_energy = 0.0;
  double var_tau = 0.0;
  double var_energy = 0.0;
  double cov = 0.0;
  double c_hat = 0.0;
  double sigma_hat_sq = 0.0;
  double standard_error_c = 0.0;
};

// Minimizer of the tube problem on [t_bar_i, t_bar_{i+1}] with the string
// pinned to the tube boundary at both ends: value w(t_bar) -+ h/2 with the
// sign alternating in i (minus at even indices, where the extremum is a
// maximum).
inline TautStringResult block_minimizer(const PiecewiseLinearPath& path,
                                        const HExtremaDecomposition& d,
                                        std::size_t i) {
  if (i < 1 || i + 1 > d.count)
    throw std::invalid_argument("block_minimizer: block index out of range");
  const double half = d.width / 2.0;
  const double sign = (i % 2 == 0) ? 1.0 : -1.0;
  const double left = d.extremum_values[i] - sign * half;
  const double right = d.extremum_values[i + 1] + sign * half;
  PiecewiseLinearPath block = restrict_path(path, d.t_bar[i], d.t_bar[i + 1]);
  return solve(TubeProblem(std::move(block), d.width,
                           BoundaryCondition::fixed(left, right)));
}

struct DecompositionReport {
  bool applicable = false;
  std::size_t n_extrema = 0;  // N(T)
  std::vector<double> block_distances;  // blocks 2 .. N(T)-2
  double max_block_distance = 0.0;
  std::vector<double> knot_residuals;  // extremum indices 2 .. N(T)-1
  double max_knot_residual = 0.0;
  std::vector<std::pair<PenaltySpec, double>> remainders;  // R(T) per penalty
  bool pass = false;
};

// Solve the global fixed-boundary problem, compare it with every middle
// block minimizer, measure how far the string sits from the tube boundary
// at the interior extremum locations, and report the energy remainder
// R(T) = total energy - sum of double-block energies.
inline DecompositionReport verify_decomposition(
    const PiecewiseLinearPath& path, double width,
    const std::vector<PenaltySpec>& penalties, double tolerance) {
  DecompositionReport rep;
  const HExtremaDecomposition d = decompose(path, width);
  rep.n_extrema = d.count;
  if (d.count < 4) return rep;
  rep.applicable = true;

  const TautStringResult global = solve(
      TubeProblem(path, width, BoundaryCondition::fixed_to_path(path)));
  const double half = width / 2.0;
  const std::size_t N = d.count;

  std::vector<TautStringResult> blocks;  // blocks[k] = minimizer of block k+2
  blocks.reserve(N - 2);
  for (std::size_t i = 2; i + 1 <= N; ++i)
    blocks.push_back(block_minimizer(path, d, i));

  for (std::size_t i = 2; i + 2 <= N; ++i) {
    const TautStringResult& psi = blocks[i - 2];
    const std::size_t a = d.t_bar_index[i], b = d.t_bar_index[i + 1];
    if (psi.string.size() != b - a + 1)
      throw std::logic_error("verify_decomposition: block grid misaligned");
    double dist = 0.0;
    for (std::size_t j = a; j <= b; ++j)
      dist = std::max(dist, std::abs(global.string.values[j] -
                                     psi.string.values[j - a]));
    rep.block_distances.push_back(dist);
    rep.max_block_distance = std::max(rep.max_block_distance, dist);
  }

  for (std::size_t i = 2; i + 1 <= N; ++i) {
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    const double pinned = d.extremum_values[i] - sign * half;
    const double res =
        std::abs(global.string.values[d.t_bar_index[i]] - pinned);
    rep.knot_residuals.push_back(res);
    rep.max_knot_residual = std::max(rep.max_knot_residual, res);
  }

  const std::size_t pairs = N / 2;  // number of realized even extremum indices
  for (const auto& c : penalties) {
    double total = energy(global.string, c);
    double blocksum = 0.0;
    for (std::size_t i = 1; i + 1 <= pairs; ++i) {
      blocksum += energy(blocks[2 * i - 2].string, c);      // block 2i
      blocksum += energy(blocks[2 * i + 1 - 2].string, c);  // block 2i+1
    }
    rep.remainders.emplace_back(c, total - blocksum);
  }

  rep.pass = rep.max_block_distance <= tolerance;
  return rep;
}

// Stream a Brownian path (one counter stream per call) and harvest
// n_blocks double-block samples, discarding everything before the second
// extremum location. Memory stays proportional to one double block.
inline std::vector<RenewalSample> sample_renewal(
    double width, const std::vector<PenaltySpec>& penalties,
    std::size_t n_blocks, double dt, std::uint64_t seed) {
  if (n_blocks < 1)
    throw std::invalid_argument("sample_renewal: need n_blocks >= 1");
  if (!(dt > 0.0) || !(width > 0.0))
    throw std::invalid_argument("sample_renewal: dt and width must be > 0");

  CounterRng rng(seed);
  detail::HExtremaTracker tracker(width);

  std::vector<double> ts, ws;          // buffer from the current pair start
  std::size_t base = 0;                // global index of buffer front
  const double sqdt = std::sqrt(dt);

  struct BarInfo {
    std::size_t n;
    std::size_t index;  // global grid index
    double time;
    double value;
  };
  std::vector<BarInfo> bars;  // realized extremum locations not yet consumed

  std::vector<RenewalSample> samples;
  samples.reserve(n_blocks);

  std::size_t j = 0;
  double w = 0.0;
  auto solve_block = [&](const BarInfo& l, const BarInfo& r) {
    const double half = width / 2.0;
    const double sign = (l.n % 2 == 0) ? 1.0 : -1.0;
    std::vector<double> bt(ts.begin() + (l.index - base),
                           ts.begin() + (r.index - base) + 1);
    std::vector<double> bw(ws.begin() + (l.index - base),
                           ws.begin() + (r.index - base) + 1);
    return solve(TubeProblem(
        PiecewiseLinearPath(std::move(bt), std::move(bw)), width,
        BoundaryCondition::fixed(l.value - sign * half,
                                 r.value + sign * half)));
  };

  while (samples.size() < n_blocks) {
    const double t = static_cast<double>(j) * dt;
    ts.push_back(t);
    ws.push_back(w);
    const auto ev = tracker.push(j, t, w);
    ++j;
    w += rng.next_normal() * sqdt;

    if (!ev) continue;
    if (ev->n >= 2)
      bars.push_back({ev->n, ev->t_bar_index, ev->t_bar, ev->extremum_value});
    if (ev->n < 4 || ev->n % 2 != 0) continue;

    // bars now ends with t_bar_{2i}, preceded by 2i-1 and 2i-2
    const BarInfo& b2 = bars[bars.size() - 3];
    const BarInfo& b1 = bars[bars.size() - 2];
    const BarInfo& b0 = bars.back();
    const TautStringResult left = solve_block(b2, b1);
    const TautStringResult right = solve_block(b1, b0);

    RenewalSample s;
    s.tau = b0.time - b2.time;
    for (const auto& c : penalties)
      s.energies.emplace_back(c, energy(left.string, c) +
                                     energy(right.string, c));
    samples.push_back(std::move(s));

    // drop everything before the new pair start
    const std::size_t keep = b0.index - base;
    ts.erase(ts.begin(), ts.begin() + keep);
    ws.erase(ws.begin(), ws.begin() + keep);
    base = b0.index;
    bars.erase(bars.begin(), bars.end() - 1);
  }
  return samples;
}

// Moment estimators of the long-run energy rate: c_hat = mean(Y)/mean(tau)
// and the CLT variance
//   sigma_hat^2 = mean(Y)^2/mean(tau)^3 Var(tau) + Var(Y)/mean(tau)
//                 - 2 Cov(tau, Y) mean(Y)/mean(tau)^2,
// with unbiased sample variances/covariance; the delta-method standard error
// of c_hat is sqrt(sigma_hat^2 / (n mean(tau))).
inline EstimatorReport estimate(const std::vector<RenewalSample>& samples,
                                const PenaltySpec& penalty) {
  if (samples.size() < 2)
    throw std::invalid_argument("estimate: need at least two samples");
  std::vector<double> tau(samples.size()), y(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    tau[i] = samples[i].tau;
    y[i] = samples[i].energy_for(penalty);
  }
  EstimatorReport r;
  r.penalty = penalty;
  r.n_samples = samples.size();
  const SummaryStats st = summarize(tau);
  const SummaryStats sy = summarize(y);
  r.mean_tau = st.mean;
  r.mean_energy = sy.mean;
  r.var_tau = *st.variance;
  r.var_energy = *sy.variance;
  r.cov = covariance(tau, y);
  r.c_hat = r.mean_energy / r.mean_tau;
  r.sigma_hat_sq = r.mean_energy * r.mean_energy /
                       (r.mean_tau * r.mean_tau * r.mean_tau) * r.var_tau +
                   r.var_energy / r.mean_tau -
                   2.0 * r.cov * r.mean_energy / (r.mean_tau * r.mean_tau);
  r.standard_error_c = std::sqrt(
      std::max(0.0, r.sigma_hat_sq) /
      (static_cast<double>(r.n_samples) * r.mean_tau));
  return r;
}

// Standardized global energies over independent replicates:
//   (energy(eta_T) - T c_hat) / sqrt(T sigma_hat^2),
// with c_hat and sigma_hat^2 estimated from a separate renewal run so the
// statistics are not self-normalized.
inline std::vector<double> clt_experiment(double width,
                                          const PenaltySpec& penalty,
                                          double horizon,
                                          std::size_t replicates, double dt,
                                          std::uint64_t seed,
                                          std::size_t calibration_blocks = 5000,
                                          unsigned threads = 1) {
  if (replicates < 50)
    throw std::invalid_argument("clt_experiment: need at least 50 replicates");
  const std::vector<RenewalSample> calib =
      sample_renewal(width, {penalty}, calibration_blocks, dt,
                     fork_seed(seed, detail::kDomainCalibration, 0));
  const EstimatorReport rep = estimate(calib, penalty);
  if (!(rep.sigma_hat_sq > 0.0))
    throw DegenerateVarianceError("clt_experiment: estimated variance is not positive");

  std::vector<double> stats(replicates);
  parallel_for_index(replicates, threads, [&](std::size_t r) {
    const PiecewiseLinearPath path = generate_brownian(
        horizon, dt, fork_seed(seed, detail::kDomainReplicate, r));
    const TautStringResult eta = solve(
        TubeProblem(path, width, BoundaryCondition::fixed_to_path(path)));
    const double e = energy(eta.string, penalty);
    stats[r] =
        (e - horizon * rep.c_hat) / std::sqrt(horizon * rep.sigma_hat_sq);
  });
  return stats;
}

// Synthetic (X, tau) pair generators with closed-form moments, so the
// standardization variance is exact rather than estimated.
struct AnscombeConfig {
  enum class PairLaw { independent, linear_correlated };
  PairLaw law = PairLaw::independent;
  double rho = 0.0;        // linear_correlated only
  double tau_mean = 1.0;   // exponential duration law
  double x_mean = 5.0;     // Gaussian reward law
  double x_var = 1.0;
  double horizon = 5000.0;
  std::size_t replicates = 500;
  std::uint64_t seed = 1;
};

struct AnscombeReport {
  std::vector<double> statistics;
  double sigma_bar_sq = 0.0;
  KsResult ks;
};

// Randomly indexed sums: per replicate, draw pairs until the cumulative
// duration passes the horizon t, form the reward sum U_{N(t)-1} and
// standardize by sqrt(t sigma_bar^2) with
//   sigma_bar^2 = Xbar^2/taubar^3 var(tau) + var(X)/taubar
//                 - 2 cov(X,tau) Xbar/taubar^2.
inline AnscombeReport anscombe_simulate(const AnscombeConfig& cfg,
                                        unsigned threads = 1) {
  if (!(cfg.tau_mean > 0.0))
    throw std::invalid_argument("anscombe_simulate: tau mean must be > 0");
  if (!(cfg.x_var >= 0.0))
    throw std::invalid_argument("anscombe_simulate: x variance must be >= 0");
  if (!(cfg.horizon > 0.0) || cfg.replicates < 1)
    throw std::invalid_argument("anscombe_simulate: bad horizon or replicates");
  if (cfg.law == AnscombeConfig::PairLaw::linear_correlated &&
      !(std::abs(cfg.rho) <= 1.0))
    throw std::invalid_argument("anscombe_simulate: need |rho| <= 1");

  const double tau_bar = cfg.tau_mean;
  const double var_tau = cfg.tau_mean * cfg.tau_mean;  // exponential law
  const double sd_tau = cfg.tau_mean;
  const double x_bar = cfg.x_mean;
  const double sd_x = std::sqrt(cfg.x_var);
  const double cov_xtau =
      cfg.law == AnscombeConfig::PairLaw::linear_correlated
          ? cfg.rho * sd_x * sd_tau
          : 0.0;

  AnscombeReport rep;
  rep.sigma_bar_sq = x_bar * x_bar / (tau_bar * tau_bar * tau_bar) * var_tau +
                     cfg.x_var / tau_bar -
                     2.0 * cov_xtau * x_bar / (tau_bar * tau_bar);
  const double scale = std::abs(x_bar * x_bar / (tau_bar * tau_bar * tau_bar) *
                                var_tau) +
                       std::abs(cfg.x_var / tau_bar) +
                       std::abs(2.0 * cov_xtau * x_bar / (tau_bar * tau_bar));
  if (rep.sigma_bar_sq <= 1e-12 * scale)
    throw DegenerateVarianceError(
        "anscombe_simulate: sigma_bar^2 vanishes for this pair law");

  rep.statistics.resize(cfg.replicates);
  const double t = cfg.horizon;
  parallel_for_index(cfg.replicates, threads, [&](std::size_t r) {
    CounterRng rng(fork_seed(cfg.seed, detail::kDomainPairs, r));
    double s = 0.0, u = 0.0, last_x = 0.0;
    std::size_t n = 0;
    for (;;) {
      const double tau_i = rng.next_exponential(cfg.tau_mean);
      const double z = rng.next_normal();
      double x_i;
      if (cfg.law == AnscombeConfig::PairLaw::independent) {
        x_i = cfg.x_mean + sd_x * z;
      } else {
        x_i = cfg.x_mean + cfg.rho * sd_x * (tau_i - tau_bar) / sd_tau +
              std::sqrt(std::max(0.0, 1.0 - cfg.rho * cfg.rho)) * sd_x * z;
      }
      if (s + tau_i > t) break;
      s += tau_i;
      u += x_i;
      last_x = x_i;
      ++n;
    }
    const double u_before_last = n >= 1 ? u - last_x : 0.0;
    rep.statistics[r] =
        (u_before_last - t * x_bar / tau_bar) / std::sqrt(t * rep.sigma_bar_sq);
  });
  rep.ks = ks_normality(rep.statistics);
  return rep;
}

}  // namespace tautband
