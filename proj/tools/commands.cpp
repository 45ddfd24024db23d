#include "epibg/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "epibg/baselines.hpp"
#include "epibg/cli/config.hpp"
#include "epibg/epistemic.hpp"
#include "epibg/game_model.hpp"
#include "epibg/sim_harness.hpp"
#include "epibg/stats_core.hpp"
#include "epibg/testing/oracle_suites.hpp"

namespace epibg::cli {

namespace {

// Execution settings that cannot change results; left out of the stamp so
// that output does not depend on them.
bool affects_results(const std::string& entry) {
  return entry.rfind("scenario.workers=", 0) != 0;
}

void write_stamp(std::ostream& os, const std::string& command, const RunConfig& cfg,
                 std::uint64_t seed) {
  os << "# epibg " << command << "\n# config: seed=" << seed;
  for (const std::string& e : cfg.resolved_entries()) {
    if (affects_results(e) && e.rfind("scenario.seed=", 0) != 0) os << "; " << e;
  }
  os << "\n";
}

struct Output {
  std::ostream* stream = nullptr;
  std::unique_ptr<std::ofstream> file;
};

Output open_output(const std::string& path, std::ostream& fallback) {
  Output o;
  if (path.empty() || path == "-") {
    o.stream = &fallback;
    return o;
  }
  o.file = std::make_unique<std::ofstream>(path);
  if (!*o.file) throw ConfigError("cannot write output file '" + path + "'");
  o.stream = o.file.get();
  return o;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig cfg = path.empty() ? RunConfig() : RunConfig::load(path);
  for (const std::string& o : overrides) cfg.set(o);
  return cfg;
}

int cmd_fit_gamma(const std::string& powers_text, double lambda, std::ostream& out,
                  std::ostream& err) {
  std::vector<double> powers;
  try {
    powers = parse_real_list(powers_text, "--powers");
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (powers.empty()) {
    err << "error: no interferers\n";
    return kExitUsage;
  }
  if (!(lambda > 0.0)) {
    err << "error: --lambda must be > 0\n";
    return kExitUsage;
  }
  GammaInterferenceModel model;
  try {
    model = fit_gamma_mme(powers, lambda);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  const MomentVector m = gamma_moments(model, 4);
  out << "quantity,value\n";
  out << "alpha_hat," << format_number(model.alpha_hat) << "\n";
  out << "theta_hat," << format_number(model.theta_hat) << "\n";
  for (int k = 1; k <= 4; ++k) {
    out << "raw_moment_" << k << "," << format_number(m.raw(k)) << "\n";
  }
  for (int k = 2; k <= 4; ++k) {
    out << "central_moment_" << k << "," << format_number(m.central(k)) << "\n";
  }
  return kExitOk;
}

struct SolveOptions {
  std::string method;
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  std::string trace;
  int moment = 0;  // 0: from scenario.policy
};

void write_trace(const std::string& path, const EpistemicTrace& trace) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write trace file '" + path + "'");
  os << "l,m,role,observer,target,chosen_power,statistic,infeasible,clamped,truncated\n";
  for (const BeliefStage& s : trace.stages) {
    const StageRecord r = to_record(s);
    os << r.l << ',' << r.m << ',' << to_string(r.role) << ',' << r.observer << ','
       << r.target << ',' << format_number(r.chosen_power) << ','
       << format_number(r.statistic) << ',' << r.infeasible << ',' << r.clamped << ','
       << r.truncated << '\n';
  }
}

int cmd_solve(const SolveOptions& opt, std::ostream& out, std::ostream& err,
              const std::optional<std::string>& env_seed) {
  const RunConfig cfg = load_config(opt.config, opt.overrides);
  const std::uint64_t seed = cfg.resolved_seed(env_seed);
  const ScenarioSpec spec = cfg.scenario(seed);
  const NetworkState net = cfg.network(spec);
  const PowerGrid& grid = spec.grid;
  const RayleighPrior prior = RayleighPrior::from_sigma(spec.rayleigh_sigma);
  const std::size_t n = net.size();

  std::vector<double> powers(n);
  std::vector<double> statistic(n);
  std::vector<bool> feasible(n);
  std::vector<std::uint64_t> evaluations;
  std::string summary;
  bool converged = true;

  auto realized = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      statistic[i] = sinr_at(net, powers, i);
      feasible[i] = statistic[i] >= net.node(i).sinr_threshold;
    }
  };

  if (opt.method == "epistemic") {
    EpistemicPolicy policy;
    if (const auto* p = std::get_if<EpistemicPolicy>(&spec.solver)) policy = *p;
    if (opt.moment != 0) policy.moment_order = opt.moment;
    try {
      policy.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    EngineOptions eo;
    eo.max_stages = spec.max_iterations;
    eo.detail = opt.trace.empty() ? TraceDetail::summary : TraceDetail::stages;
    const EpistemicTrace trace = run_epistemic_game(net, grid, prior, policy, eo);
    powers = trace.final_profile.powers;
    for (std::size_t i = 0; i < n; ++i) {
      statistic[i] = trace.final_statistic[i];
      feasible[i] = !trace.infeasible[i];
    }
    evaluations = trace.node_evaluations;
    converged = trace.converged;
    summary = "# policy=M" + std::to_string(policy.moment_order) +
              " passes=" + std::to_string(trace.passes) +
              " converged=" + (trace.converged ? "1" : "0") +
              " eu_evaluations=" + std::to_string(trace.eu_evaluations) + "\n";
    if (!opt.trace.empty()) write_trace(opt.trace, trace);
  } else if (opt.method == "nash") {
    const double eps = parse_real(cfg.get("scenario", "nash_epsilon_linear"),
                                  "scenario.nash_epsilon_linear");
    try {
      const NashSolution sol = solve_nash_full_csi(net, grid, spec.max_iterations, eps);
      powers = sol.profile.powers;
      realized();
      for (std::size_t i = 0; i < n; ++i) feasible[i] = sol.feasible[i];
      summary = "# rounds=" + std::to_string(sol.rounds) + " converged=1\n";
    } catch (const ConvergenceError& e) {
      err << "error: " << e.what() << "\n";
      return kExitNonConvergence;
    }
  } else if (opt.method == "epa") {
    double level = grid.p_max();
    if (cfg.has("scenario", "epa_level_linear")) {
      level = parse_real(cfg.get("scenario", "epa_level_linear"), "scenario.epa_level_linear");
    }
    try {
      powers = epa_profile(net, grid, level).powers;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(e.what()) + " for key 'scenario.epa_level_linear'");
    }
    realized();
  } else if (opt.method == "sncpc") {
    const SncpcResult r = sncpc_solve(net, grid, prior, spec.max_iterations);
    powers = r.profile.powers;
    realized();
    for (std::size_t i = 0; i < n; ++i) feasible[i] = r.feasible[i];
    converged = r.converged;
    summary = "# iterations=" + std::to_string(r.iterations) +
              " converged=" + (r.converged ? "1" : "0") + "\n";
  } else {
    throw ConfigError("unknown solve method '" + opt.method + "'");
  }

  Output o = open_output(opt.out, out);
  std::ostream& os = *o.stream;
  write_stamp(os, "solve " + opt.method, cfg, seed);
  os << summary;
  os << "id,gain,power,statistic,feasible";
  if (!evaluations.empty()) os << ",eu_evaluations";
  os << "\n";
  for (std::size_t i = 0; i < n; ++i) {
    os << net.node(i).id << ',' << format_number(net.node(i).gain) << ','
       << format_number(powers[i]) << ',' << format_number(statistic[i]) << ','
       << (feasible[i] ? 1 : 0);
    if (!evaluations.empty()) os << ',' << evaluations[i];
    os << "\n";
  }
  os.flush();
  if (!converged) {
    err << "error: solver did not converge within " << spec.max_iterations
        << " iterations\n";
    return kExitNonConvergence;
  }
  return kExitOk;
}

struct FigureOptions {
  int which = 0;
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
};

int cmd_figure(const FigureOptions& opt, std::ostream& out, std::ostream& err,
               const std::optional<std::string>& env_seed) {
  const RunConfig cfg = load_config(opt.config, opt.overrides);
  const std::uint64_t seed = cfg.resolved_seed(env_seed);
  const ScenarioSpec spec = cfg.scenario(seed);
  const int truncation = static_cast<int>(
      parse_integer(cfg.get("scenario", "truncation"), "scenario.truncation"));

  std::ostringstream body;
  std::vector<std::string> warnings;
  auto note = [&](const ScenarioMetrics& m, const std::string& where) {
    if (m.warning) {
      warnings.push_back(where + ": " + std::to_string(m.nonconverged) + " of " +
                         std::to_string(m.trials_run) + " trials hit the iteration budget");
    }
  };
  const auto start = std::chrono::steady_clock::now();
  if (opt.which == 3 || opt.which == 4) {
    const auto gains = cfg.figure_gains(opt.which);
    const auto thresholds = cfg.figure_thresholds_db(opt.which);
    if (gains.empty() || thresholds.empty()) throw ConfigError("figure sweep lists are empty");
    const auto rows = opt.which == 3 ? sweep_fig3(spec, gains, thresholds)
                                     : sweep_fig4(spec, gains, thresholds);
    body << "gain,threshold_db,metric,ci\n";
    for (const GainSweepRow& r : rows) {
      body << format_number(r.gain) << ',' << format_number(r.threshold_db) << ','
           << format_number(r.metric) << ',' << format_number(r.ci) << "\n";
      note(r.metrics, "gain " + format_number(r.gain) + " threshold " +
                          format_number(r.threshold_db) + " dB");
    }
  } else if (opt.which == 5 || opt.which == 6) {
    const auto fractions = cfg.figure_fractions(opt.which);
    const auto policies = cfg.figure_policies(opt.which, truncation);
    if (fractions.empty() || policies.empty()) throw ConfigError("figure sweep lists are empty");
    for (double f : fractions) {
      if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("interference_pct must be in [0, 100]");
    }
    const auto rows = opt.which == 5 ? sweep_fig5(spec, fractions, policies)
                                     : sweep_fig6(spec, fractions, policies);
    body << "interference_pct,policy,metric,ci\n";
    for (const FractionSweepRow& r : rows) {
      body << format_number(r.interference_pct) << ',' << r.policy << ','
           << format_number(r.metric) << ',' << format_number(r.ci) << "\n";
      note(r.metrics, r.policy + " at " + format_number(r.interference_pct) + "%");
    }
  } else {
    throw ConfigError("figure must be 3, 4, 5 or 6");
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  Output o = open_output(opt.out, out);
  std::ostream& os = *o.stream;
  write_stamp(os, "figure " + std::to_string(opt.which), cfg, seed);
  for (const std::string& w : warnings) os << "# warning: " << w << "\n";
  os << body.str();
  os.flush();
  err << "figure " << opt.which << ": " << format_number(seconds) << " s\n";
  for (const std::string& w : warnings) err << "warning: " << w << "\n";
  return warnings.empty() ? kExitOk : kExitNonConvergence;
}

int cmd_selftest(std::uint64_t seed, std::ostream& out) {
  using namespace epibg::testing;
  std::vector<SuiteResult> results;
  results.push_back(erlang_exactness_suite(200, seed));
  results.push_back(series_vs_quadrature_suite(1000, seed + 1));
  results.push_back(epsilon_nash_suite(100, seed + 2));
  const SelectionReport sel = selection_equivalence_suite(50, seed + 3);
  results.push_back(sel.selection);
  results.push_back(sel.complexity);
  bool ok = true;
  for (const SuiteResult& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << " ["
        << format_number(r.seconds) << " s]\n";
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitNonConvergence;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::optional<std::string>& env_seed) {
  CLI::App app{"Epistemic Bayesian power-control game simulator", "epibg"};
  app.require_subcommand(1);

  std::string powers_text;
  double lambda = 1.0;
  auto* fit = app.add_subcommand("fit-gamma", "Method-of-moments Gamma fit of interference");
  fit->add_option("--powers", powers_text, "Comma-separated interferer powers");
  fit->add_option("--lambda", lambda, "Exponential rate of |g|^2")->required();

  SolveOptions solve_opt;
  auto* solve = app.add_subcommand("solve", "Solve one network realization");
  solve->add_option("method", solve_opt.method, "nash | epistemic | epa | sncpc")
      ->required()
      ->check(CLI::IsMember({"nash", "epistemic", "epa", "sncpc"}));
  solve->add_option("--config", solve_opt.config, "Config file");
  solve->add_option("--set", solve_opt.overrides, "Override section.key=value");
  solve->add_option("--out", solve_opt.out, "Output CSV (default stdout)");
  solve->add_option("--trace", solve_opt.trace, "Stage trace CSV (epistemic only)");
  solve->add_option("--moment", solve_opt.moment, "Moment order k for epistemic")
      ->check(CLI::Range(1, 4));

  FigureOptions fig_opt;
  auto* figure = app.add_subcommand("figure", "Run one figure sweep");
  figure->add_option("which", fig_opt.which, "3 | 4 | 5 | 6")
      ->required()
      ->check(CLI::IsMember({3, 4, 5, 6}));
  figure->add_option("--config", fig_opt.config, "Config file");
  figure->add_option("--set", fig_opt.overrides, "Override section.key=value");
  figure->add_option("--out", fig_opt.out, "Output CSV (default stdout)");

  std::uint64_t selftest_seed = 2024;
  auto* selftest = app.add_subcommand("selftest", "Run the oracle suites");
  selftest->add_option("--seed", selftest_seed, "Seed of the randomized suites");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit_gamma(powers_text, lambda, out, err);
    if (solve->parsed()) return cmd_solve(solve_opt, out, err, env_seed);
    if (figure->parsed()) return cmd_figure(fig_opt, out, err, env_seed);
    if (selftest->parsed()) return cmd_selftest(selftest_seed, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace epibg::cli
