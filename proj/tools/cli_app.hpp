#pragma once

// Batch driver: seeded campaigns, JSON config with flag overrides, CSV/JSON
// artifacts with a metadata sidecar per artifact. Exit status 0 on pass,
// 1 on test-style failure, 2 on usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tautband/campaign.hpp"
#include "tautband/tautband.hpp"

namespace tautband::cli {

inline constexpr const char* kVersion = "0.1.0";

using nlohmann::json;

namespace fs = std::filesystem;

inline json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot read config file: " + path);
  json j;
  is >> j;
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  return j;
}

// Flags win over config; config wins over defaults.
template <class T>
void overlay(CLI::App* cmd, const std::string& flag, const json& cfg, T& value) {
  if (cmd->get_option(flag)->count() > 0) return;
  const std::string key = flag.substr(2);
  if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

inline PenaltySpec parse_penalty(const std::string& name) {
  if (name == "quadratic") return PenaltySpec::quadratic();
  if (name == "sqrt1p") return PenaltySpec::sqrt1p();
  if (name.rfind("power", 0) == 0) {
    const std::string tail = name.substr(5);
    try {
      return PenaltySpec::power(std::stod(tail));
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("bad penalty exponent in '" + name + "'");
    }
  }
  throw std::invalid_argument("unknown penalty '" + name +
                              "' (use quadratic, sqrt1p or power<alpha>)");
}

inline std::vector<PenaltySpec> parse_penalties(const std::string& csv) {
  std::vector<PenaltySpec> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string item =
        csv.substr(start, comma == std::string::npos ? csv.size() - start
                                                     : comma - start);
    if (!item.empty()) out.push_back(parse_penalty(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("empty penalty list");
  return out;
}

struct ArtifactWriter {
  fs::path out_dir;
  std::string command;
  json config = json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  void write(const std::string& name, const std::string& body) const {
    fs::create_directories(out_dir);
    const fs::path target = out_dir / name;
    write_text_file(target.string(), body);
    json meta{{"command", command},
              {"config", config},
              {"seed", seed},
              {"version", kVersion},
              {"warnings", warnings}};
    write_text_file(target.string() + ".meta.json", meta.dump(2) + "\n");
    std::cout << "wrote " << target.string() << "\n";
  }
};

inline void warn_on_coarse_dt(ArtifactWriter& w, double dt, double h) {
  const double limit = (h / 4.0) * (h / 4.0) / 100.0;
  if (dt > limit) {
    w.warnings.push_back(
        "dt exceeds (h/4)^2/100; crossing-time discretization bias may not be "
        "negligible at this resolution");
    std::cerr << "warning: " << w.warnings.back() << "\n";
  }
}

inline PiecewiseLinearPath load_path(const std::string& file) {
  std::ifstream is(file);
  if (!is) throw std::invalid_argument("cannot read path CSV: " + file);
  return path_from_csv(is);
}

inline json estimator_to_json(const EstimatorReport& r) {
  return json{{"penalty", r.penalty.name()},
              {"n_samples", r.n_samples},
              {"mean_tau", r.mean_tau},
              {"mean_energy", r.mean_energy},
              {"var_tau", r.var_tau},
              {"var_energy", r.var_energy},
              {"cov", r.cov},
              {"c_hat", r.c_hat},
              {"sigma_hat_sq", r.sigma_hat_sq},
              {"standard_error_c", r.standard_error_c}};
}

inline int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"taut strings in a tube around sampled Brownian paths"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print help");  // keep -h free for the tube width
  std::string config_file;
  app.add_option("--config", config_file, "JSON config; flags override it");
  std::string out_dir = ".";
  app.add_option("--out", out_dir, "output directory for artifacts");
  auto add_subcommand = [&](const char* sub_name, const char* desc) {
    CLI::App* c = app.add_subcommand(sub_name, desc);
    c->set_help_flag("--help", "print help");
    c->fallthrough();  // --config/--out may follow the subcommand
    return c;
  };

  // shared knobs, overlaid per subcommand below
  struct {
    double T = 1.0, dt = 1e-3, h = 1.0;
    std::uint64_t seed = 1;
    std::string input, penalties = "quadratic";
    double tolerance = 1e-6, oracle_tolerance = 1e-9;
    std::uint64_t replicates = 500, blocks = 1000, calib_blocks = 5000;
    std::uint64_t instances = 200, max_grid = 64;
    unsigned threads = 1;
    double p_threshold = 0.01;
    bool free_left = false, free_right = false;
    double left_value = 0.0, right_value = 0.0;
    bool has_left_value = false, has_right_value = false;
    std::string law = "independent";
    double rho = 0.0, tau_mean = 1.0, x_mean = 5.0, x_var = 1.0;
    double energy_tolerance = 1e-8;
  } p;

  auto* gen = add_subcommand("gen", "emit a seeded Brownian path CSV");
  gen->add_option("--T", p.T, "horizon");
  gen->add_option("--dt", p.dt, "grid step");
  gen->add_option("--seed", p.seed, "stream seed");

  auto* solve_cmd = add_subcommand("solve", "path CSV in, taut string CSV out");
  solve_cmd->add_option("--input", p.input, "path CSV");
  solve_cmd->add_option("--h", p.h, "tube width");
  solve_cmd->add_flag("--free-left", p.free_left, "leave the left end free");
  solve_cmd->add_flag("--free-right", p.free_right, "leave the right end free");
  auto* lv = solve_cmd->add_option("--left-value", p.left_value,
                                   "pin the left end to this value");
  auto* rv = solve_cmd->add_option("--right-value", p.right_value,
                                   "pin the right end to this value");

  auto* dec = add_subcommand("decompose", "path CSV in, extrema CSV out");
  dec->add_option("--input", p.input, "path CSV");
  dec->add_option("--h", p.h, "extremum height");

  auto* vdec = add_subcommand(
      "verify-decomposition",
      "check the block structure of the taut string on a sampled path");
  vdec->add_option("--input", p.input, "path CSV (generated when omitted)");
  vdec->add_option("--T", p.T, "horizon when generating");
  vdec->add_option("--dt", p.dt, "grid step when generating");
  vdec->add_option("--seed", p.seed, "stream seed when generating");
  vdec->add_option("--h", p.h, "tube width");
  vdec->add_option("--penalties", p.penalties, "comma-separated penalty list");
  vdec->add_option("--tolerance", p.tolerance, "block agreement tolerance");

  auto* vinv = add_subcommand(
      "verify-invariance", "cross-check penalty independence on one instance");
  vinv->add_option("--input", p.input, "path CSV (generated when omitted)");
  vinv->add_option("--T", p.T, "horizon when generating");
  vinv->add_option("--dt", p.dt, "grid step when generating");
  vinv->add_option("--seed", p.seed, "stream seed when generating");
  vinv->add_option("--h", p.h, "tube width");
  vinv->add_option("--penalties", p.penalties, "comma-separated penalty list");
  vinv->add_option("--tolerance", p.tolerance, "pairwise distance tolerance");
  vinv->add_option("--oracle-tolerance", p.oracle_tolerance,
                   "reference minimizer stopping tolerance");

  auto* ochk = add_subcommand(
      "oracle-check", "randomized sweep-vs-reference minimizer comparison");
  ochk->add_option("--instances", p.instances, "number of random instances");
  ochk->add_option("--max-grid", p.max_grid, "largest instance grid");
  ochk->add_option("--seed", p.seed, "campaign seed");
  ochk->add_option("--tolerance", p.tolerance, "sup-distance tolerance");
  ochk->add_option("--energy-tolerance", p.energy_tolerance,
                   "quadratic energy gap tolerance");
  ochk->add_option("--oracle-tolerance", p.oracle_tolerance,
                   "reference minimizer stopping tolerance");

  auto* est = add_subcommand(
      "estimate-c", "sample renewal blocks and estimate the energy rate");
  est->add_option("--h", p.h, "tube width");
  est->add_option("--blocks", p.blocks, "number of double-block samples");
  est->add_option("--dt", p.dt, "grid step");
  est->add_option("--seed", p.seed, "stream seed");
  est->add_option("--penalties", p.penalties, "comma-separated penalty list");

  auto* clt = add_subcommand(
      "clt", "standardized global energies over independent replicates");
  clt->add_option("--h", p.h, "tube width");
  clt->add_option("--T", p.T, "horizon");
  clt->add_option("--dt", p.dt, "grid step");
  clt->add_option("--replicates", p.replicates, "number of replicates");
  clt->add_option("--seed", p.seed, "campaign seed");
  clt->add_option("--penalties", p.penalties, "penalty (first entry used)");
  clt->add_option("--calib-blocks", p.calib_blocks,
                  "renewal blocks for the independent calibration run");
  clt->add_option("--threads", p.threads, "worker threads for replicates");
  clt->add_option("--p-threshold", p.p_threshold, "KS pass threshold");

  auto* ans = add_subcommand(
      "anscombe", "randomly indexed sum CLT with synthetic pair laws");
  ans->add_option("--law", p.law, "independent or linear-correlated");
  ans->add_option("--rho", p.rho, "correlation for linear-correlated");
  ans->add_option("--tau-mean", p.tau_mean, "exponential duration mean");
  ans->add_option("--x-mean", p.x_mean, "Gaussian reward mean");
  ans->add_option("--x-var", p.x_var, "Gaussian reward variance");
  ans->add_option("--t", p.T, "horizon");
  ans->add_option("--replicates", p.replicates, "number of replicates");
  ans->add_option("--seed", p.seed, "campaign seed");
  ans->add_option("--threads", p.threads, "worker threads for replicates");
  ans->add_option("--p-threshold", p.p_threshold, "KS pass threshold");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("tautband");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const json cfg = load_config(config_file);
    if (cfg.contains("out") && app.get_option("--out")->count() == 0)
      out_dir = cfg.at("out").get<std::string>();

    CLI::App* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    ArtifactWriter w{fs::path(out_dir), name};

    if (name == "gen") {
      overlay(cmd, "--T", cfg, p.T);
      overlay(cmd, "--dt", cfg, p.dt);
      overlay(cmd, "--seed", cfg, p.seed);
      w.seed = p.seed;
      w.config = {{"T", p.T}, {"dt", p.dt}, {"seed", p.seed}};
      const auto path = generate_brownian(p.T, p.dt, p.seed);
      w.write("path.csv", path_to_csv(path));
      return 0;
    }

    if (name == "solve") {
      overlay(cmd, "--input", cfg, p.input);
      overlay(cmd, "--h", cfg, p.h);
      overlay(cmd, "--free-left", cfg, p.free_left);
      overlay(cmd, "--free-right", cfg, p.free_right);
      if (p.input.empty()) throw std::invalid_argument("solve: --input is required");
      const auto path = load_path(p.input);
      p.has_left_value = lv->count() > 0 || cfg.contains("left-value");
      p.has_right_value = rv->count() > 0 || cfg.contains("right-value");
      overlay(cmd, "--left-value", cfg, p.left_value);
      overlay(cmd, "--right-value", cfg, p.right_value);
      BoundaryCondition bc = BoundaryCondition::fixed_to_path(path);
      if (p.free_left) bc.left.reset();
      if (p.free_right) bc.right.reset();
      if (p.has_left_value) bc.left = p.left_value;
      if (p.has_right_value) bc.right = p.right_value;
      w.seed = 0;
      w.config = {{"input", p.input},
                  {"h", p.h},
                  {"left", bc.left ? json(*bc.left) : json("free")},
                  {"right", bc.right ? json(*bc.right) : json("free")}};
      const auto result = solve(TubeProblem(path, p.h, bc));
      w.write("string.csv", result_to_csv(result));
      std::cout << "quadratic energy "
                << format_g17(result.energy_for(PenaltySpec::quadratic()))
                << ", " << result.knots.size() << " knots\n";
      return 0;
    }

    if (name == "decompose") {
      overlay(cmd, "--input", cfg, p.input);
      overlay(cmd, "--h", cfg, p.h);
      if (p.input.empty())
        throw std::invalid_argument("decompose: --input is required");
      const auto path = load_path(p.input);
      w.seed = 0;
      w.config = {{"input", p.input}, {"h", p.h}};
      const auto d = decompose(path, p.h);
      w.write("decomposition.csv", decomposition_to_csv(d));
      std::cout << "N(T) = " << d.count << "\n";
      return 0;
    }

    if (name == "verify-decomposition") {
      overlay(cmd, "--input", cfg, p.input);
      overlay(cmd, "--T", cfg, p.T);
      overlay(cmd, "--dt", cfg, p.dt);
      overlay(cmd, "--seed", cfg, p.seed);
      overlay(cmd, "--h", cfg, p.h);
      overlay(cmd, "--penalties", cfg, p.penalties);
      overlay(cmd, "--tolerance", cfg, p.tolerance);
      const auto penalties = parse_penalties(p.penalties);
      w.seed = p.seed;
      w.config = {{"input", p.input}, {"T", p.T},
                  {"dt", p.dt},       {"seed", p.seed},
                  {"h", p.h},         {"penalties", p.penalties},
                  {"tolerance", p.tolerance}};
      warn_on_coarse_dt(w, p.dt, p.h);
      const PiecewiseLinearPath path = p.input.empty()
                                           ? generate_brownian(p.T, p.dt, p.seed)
                                           : load_path(p.input);
      const auto rep = verify_decomposition(path, p.h, penalties, p.tolerance);
      json remainders = json::object();
      for (const auto& [c, r] : rep.remainders) remainders[c.name()] = r;
      json out{{"applicable", rep.applicable},
               {"n_extrema", rep.n_extrema},
               {"max_block_distance", rep.max_block_distance},
               {"max_knot_residual", rep.max_knot_residual},
               {"block_distances", rep.block_distances},
               {"knot_residuals", rep.knot_residuals},
               {"remainders", remainders},
               {"pass", rep.pass}};
      w.write("verify_decomposition.json", out.dump(2) + "\n");
      if (!rep.applicable) {
        std::cout << "not applicable: N(T) = " << rep.n_extrema << " < 4\n";
        return 0;
      }
      const bool ok = rep.pass && rep.max_knot_residual <= p.tolerance;
      std::cout << (ok ? "PASS" : "FAIL") << ": max block distance "
                << format_g17(rep.max_block_distance) << ", max knot residual "
                << format_g17(rep.max_knot_residual) << "\n";
      return ok ? 0 : 1;
    }

    if (name == "verify-invariance") {
      overlay(cmd, "--input", cfg, p.input);
      overlay(cmd, "--T", cfg, p.T);
      overlay(cmd, "--dt", cfg, p.dt);
      overlay(cmd, "--seed", cfg, p.seed);
      overlay(cmd, "--h", cfg, p.h);
      overlay(cmd, "--penalties", cfg, p.penalties);
      overlay(cmd, "--tolerance", cfg, p.tolerance);
      overlay(cmd, "--oracle-tolerance", cfg, p.oracle_tolerance);
      const auto penalties = parse_penalties(p.penalties);
      w.seed = p.seed;
      w.config = {{"input", p.input},
                  {"T", p.T},
                  {"dt", p.dt},
                  {"seed", p.seed},
                  {"h", p.h},
                  {"penalties", p.penalties},
                  {"tolerance", p.tolerance},
                  {"oracle-tolerance", p.oracle_tolerance}};
      const PiecewiseLinearPath path = p.input.empty()
                                           ? generate_brownian(p.T, p.dt, p.seed)
                                           : load_path(p.input);
      const TubeProblem problem(path, p.h, BoundaryCondition::fixed_to_path(path));
      const auto rep = verify_penalty_invariance(problem, penalties, p.tolerance,
                                                 p.oracle_tolerance);
      json pairs = json::object();
      for (const auto& [c, d] : rep.solver_vs_oracle) pairs[c.name()] = d;
      json out{{"max_pairwise_distance", rep.max_pairwise_distance},
               {"solver_vs_oracle", pairs},
               {"pass", rep.pass}};
      w.write("verify_invariance.json", out.dump(2) + "\n");
      std::cout << (rep.pass ? "PASS" : "FAIL") << ": max pairwise distance "
                << format_g17(rep.max_pairwise_distance) << "\n";
      return rep.pass ? 0 : 1;
    }

    if (name == "oracle-check") {
      overlay(cmd, "--instances", cfg, p.instances);
      overlay(cmd, "--max-grid", cfg, p.max_grid);
      overlay(cmd, "--seed", cfg, p.seed);
      overlay(cmd, "--tolerance", cfg, p.tolerance);
      overlay(cmd, "--energy-tolerance", cfg, p.energy_tolerance);
      overlay(cmd, "--oracle-tolerance", cfg, p.oracle_tolerance);
      w.seed = p.seed;
      w.config = {{"instances", p.instances},
                  {"max-grid", p.max_grid},
                  {"seed", p.seed},
                  {"tolerance", p.tolerance},
                  {"energy-tolerance", p.energy_tolerance},
                  {"oracle-tolerance", p.oracle_tolerance}};
      const auto rep =
          oracle_check(p.instances, p.max_grid, p.seed, p.tolerance,
                       p.energy_tolerance, p.oracle_tolerance);
      json out{{"instances", rep.instances},
               {"max_sup_distance", rep.max_sup_distance},
               {"max_energy_gap", rep.max_energy_gap},
               {"failures", rep.failures},
               {"pass", rep.pass}};
      w.write("oracle_check.json", out.dump(2) + "\n");
      std::cout << (rep.pass ? "PASS" : "FAIL") << ": max sup distance "
                << format_g17(rep.max_sup_distance) << ", max energy gap "
                << format_g17(rep.max_energy_gap) << "\n";
      return rep.pass ? 0 : 1;
    }

    if (name == "estimate-c") {
      overlay(cmd, "--h", cfg, p.h);
      overlay(cmd, "--blocks", cfg, p.blocks);
      overlay(cmd, "--dt", cfg, p.dt);
      overlay(cmd, "--seed", cfg, p.seed);
      overlay(cmd, "--penalties", cfg, p.penalties);
      const auto penalties = parse_penalties(p.penalties);
      w.seed = p.seed;
      w.config = {{"h", p.h},
                  {"blocks", p.blocks},
                  {"dt", p.dt},
                  {"seed", p.seed},
                  {"penalties", p.penalties}};
      warn_on_coarse_dt(w, p.dt, p.h);
      const auto samples =
          sample_renewal(p.h, penalties, p.blocks, p.dt, p.seed);
      w.write("samples.csv", samples_to_csv(samples, penalties));
      json reports = json::array();
      for (const auto& c : penalties) {
        const auto r = estimate(samples, c);
        reports.push_back(estimator_to_json(r));
        std::cout << c.name() << ": c_hat " << format_g17(r.c_hat) << " +- "
                  << format_g17(r.standard_error_c) << "\n";
      }
      w.write("estimate.json", reports.dump(2) + "\n");
      return 0;
    }

    if (name == "clt") {
      overlay(cmd, "--h", cfg, p.h);
      overlay(cmd, "--T", cfg, p.T);
      overlay(cmd, "--dt", cfg, p.dt);
      overlay(cmd, "--replicates", cfg, p.replicates);
      overlay(cmd, "--seed", cfg, p.seed);
      overlay(cmd, "--penalties", cfg, p.penalties);
      overlay(cmd, "--calib-blocks", cfg, p.calib_blocks);
      overlay(cmd, "--threads", cfg, p.threads);
      overlay(cmd, "--p-threshold", cfg, p.p_threshold);
      const auto penalty = parse_penalties(p.penalties).front();
      w.seed = p.seed;
      w.config = {{"h", p.h},
                  {"T", p.T},
                  {"dt", p.dt},
                  {"replicates", p.replicates},
                  {"seed", p.seed},
                  {"penalties", p.penalties},
                  {"calib-blocks", p.calib_blocks},
                  {"p-threshold", p.p_threshold}};
      warn_on_coarse_dt(w, p.dt, p.h);
      const auto stats = clt_experiment(p.h, penalty, p.T, p.replicates, p.dt,
                                        p.seed, p.calib_blocks, p.threads);
      w.write("clt_stats.csv", statistics_to_csv(stats));
      const auto ks = ks_normality(stats);
      const auto summary = summarize(stats);
      json out{{"penalty", penalty.name()},
               {"replicates", p.replicates},
               {"ks_statistic", ks.statistic},
               {"p_value", ks.p_value},
               {"mean", summary.mean},
               {"variance", summary.variance ? json(*summary.variance) : json()},
               {"pass", ks.p_value > p.p_threshold}};
      w.write("clt_report.json", out.dump(2) + "\n");
      std::cout << (ks.p_value > p.p_threshold ? "PASS" : "FAIL")
                << ": KS p-value " << format_g17(ks.p_value) << "\n";
      return ks.p_value > p.p_threshold ? 0 : 1;
    }

    if (name == "anscombe") {
      overlay(cmd, "--law", cfg, p.law);
      overlay(cmd, "--rho", cfg, p.rho);
      overlay(cmd, "--tau-mean", cfg, p.tau_mean);
      overlay(cmd, "--x-mean", cfg, p.x_mean);
      overlay(cmd, "--x-var", cfg, p.x_var);
      overlay(cmd, "--t", cfg, p.T);
      overlay(cmd, "--replicates", cfg, p.replicates);
      overlay(cmd, "--seed", cfg, p.seed);
      overlay(cmd, "--threads", cfg, p.threads);
      overlay(cmd, "--p-threshold", cfg, p.p_threshold);
      AnscombeConfig acfg;
      if (p.law == "independent")
        acfg.law = AnscombeConfig::PairLaw::independent;
      else if (p.law == "linear-correlated")
        acfg.law = AnscombeConfig::PairLaw::linear_correlated;
      else
        throw std::invalid_argument("anscombe: --law must be independent or linear-correlated");
      acfg.rho = p.rho;
      acfg.tau_mean = p.tau_mean;
      acfg.x_mean = p.x_mean;
      acfg.x_var = p.x_var;
      acfg.horizon = p.T;
      acfg.replicates = p.replicates;
      acfg.seed = p.seed;
      w.seed = p.seed;
      w.config = {{"law", p.law},
                  {"rho", p.rho},
                  {"tau-mean", p.tau_mean},
                  {"x-mean", p.x_mean},
                  {"x-var", p.x_var},
                  {"t", p.T},
                  {"replicates", p.replicates},
                  {"p-threshold", p.p_threshold}};
      const auto rep = anscombe_simulate(acfg, p.threads);
      w.write("anscombe_stats.csv", statistics_to_csv(rep.statistics));
      const auto summary = summarize(rep.statistics);
      json out{{"sigma_bar_sq", rep.sigma_bar_sq},
               {"ks_statistic", rep.ks.statistic},
               {"p_value", rep.ks.p_value},
               {"mean", summary.mean},
               {"variance", summary.variance ? json(*summary.variance) : json()},
               {"pass", rep.ks.p_value > p.p_threshold}};
      w.write("anscombe_report.json", out.dump(2) + "\n");
      std::cout << (rep.ks.p_value > p.p_threshold ? "PASS" : "FAIL")
                << ": KS p-value " << format_g17(rep.ks.p_value)
                << ", sigma_bar_sq " << format_g17(rep.sigma_bar_sq) << "\n";
      return rep.ks.p_value > p.p_threshold ? 0 : 1;
    }

    throw std::invalid_argument("unknown subcommand");
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace tautband::cli
