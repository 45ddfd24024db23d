#include "epibg/sim_harness.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace epibg {

namespace {

constexpr double kZ95 = 1.959963984540054;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::mt19937_64 trial_engine(std::uint64_t seed, std::uint64_t trial) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(trial + 0x632BE59BD9B4E019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

// |g| ~ Rayleigh(sigma) by inversion.
double draw_rayleigh(std::mt19937_64& rng, double sigma) {
  const double u = std::generate_canonical<double, 53>(rng);
  return sigma * std::sqrt(-2.0 * std::log1p(-u));
}

struct MeanCi {
  double mean = 0.0;
  double ci = 0.0;
};

MeanCi mean_ci(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, kZ95 * std::sqrt(ss / (n - 1.0) / n)};
}

ScenarioSpec with_threshold_and_gain(const ScenarioSpec& base, double gain,
                                     double threshold_db) {
  ScenarioSpec spec = base;
  spec.tagged_gain = gain;
  spec.threshold = db_to_linear(threshold_db);
  spec.node_thresholds.clear();
  return spec;
}

}  // namespace

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

std::string solver_name(const SolverChoice& solver) {
  if (const auto* p = std::get_if<EpistemicPolicy>(&solver)) {
    return "M" + std::to_string(p->moment_order);
  }
  if (std::holds_alternative<EpaBaseline>(solver)) return "EPA";
  if (std::holds_alternative<SncpcBaseline>(solver)) return "SNCPC";
  return "NASH";
}

SolverChoice parse_solver(const std::string& name, int truncation) {
  if (name.size() == 2 && name[0] == 'M' && name[1] >= '1' && name[1] <= '4') {
    return EpistemicPolicy{name[1] - '0', truncation};
  }
  if (name == "EPA") return EpaBaseline{};
  if (name == "SNCPC") return SncpcBaseline{};
  if (name == "NASH") return FullCsiNash{};
  throw std::invalid_argument("unknown policy '" + name + "'");
}

void ScenarioSpec::validate() const {
  if (n_nodes < 1) throw std::invalid_argument("n_nodes must be >= 1");
  if (!(rayleigh_sigma > 0.0)) throw std::invalid_argument("rayleigh_sigma must be > 0");
  if (!(noise_power > 0.0)) throw std::invalid_argument("noise power must be > 0");
  if (!(threshold > 0.0)) throw std::invalid_argument("threshold must be > 0");
  if (!node_thresholds.empty() &&
      node_thresholds.size() != static_cast<std::size_t>(n_nodes)) {
    throw std::invalid_argument("node_thresholds must have one entry per node");
  }
  if (!(interference_fraction >= 0.0 && interference_fraction <= 1.0)) {
    throw std::invalid_argument("interference fraction must be in [0, 1]");
  }
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (tagged_gain && !(*tagged_gain >= 0.0)) {
    throw std::invalid_argument("tagged gain must be >= 0");
  }
  if (const auto* p = std::get_if<EpistemicPolicy>(&solver)) p->validate();
  if (const auto* e = std::get_if<EpaBaseline>(&solver)) {
    if (e->level && !grid.contains(*e->level)) {
      throw std::invalid_argument("EPA level is not a grid level");
    }
  }
}

double ScenarioSpec::threshold_of(int node) const {
  if (node_thresholds.empty()) return threshold;
  return node_thresholds.at(static_cast<std::size_t>(node));
}

int ScenarioSpec::interferer_count() const {
  const int wanted = static_cast<int>(
      std::ceil(interference_fraction * n_nodes - 1e-9));
  return std::clamp(wanted, 0, n_nodes - 1);
}

TrialRealization draw_trial(const ScenarioSpec& spec, std::uint64_t trial) {
  std::mt19937_64 rng = trial_engine(spec.seed, trial);
  // All n_nodes gains are drawn so that trial t sees the same channels at
  // every sweep point.
  std::vector<double> all(static_cast<std::size_t>(spec.n_nodes));
  for (double& g : all) g = draw_rayleigh(rng, spec.rayleigh_sigma);
  if (spec.tagged_gain) all[0] = *spec.tagged_gain;

  TrialRealization draw;
  const int active = 1 + spec.interferer_count();
  for (int i = 0; i < active; ++i) {
    draw.ids.push_back(i);
    draw.gains.push_back(all[static_cast<std::size_t>(i)]);
  }
  return draw;
}

NetworkState trial_network(const ScenarioSpec& spec, const TrialRealization& draw) {
  std::vector<NodeConfig> nodes;
  nodes.reserve(draw.ids.size());
  for (std::size_t i = 0; i < draw.ids.size(); ++i) {
    nodes.push_back({draw.ids[i], draw.gains[i], spec.threshold_of(draw.ids[i])});
  }
  return NetworkState(std::move(nodes), spec.noise_power);
}

PowerProfile solve_trial(const ScenarioSpec& spec, const NetworkState& network,
                         bool& converged) {
  const RayleighPrior prior = RayleighPrior::from_sigma(spec.rayleigh_sigma);
  converged = true;
  if (const auto* policy = std::get_if<EpistemicPolicy>(&spec.solver)) {
    EngineOptions options;
    options.max_stages = spec.max_iterations;
    options.detail = TraceDetail::summary;
    EpistemicTrace trace = run_epistemic_game(network, spec.grid, prior, *policy, options);
    converged = trace.converged;
    return std::move(trace.final_profile);
  }
  if (const auto* epa = std::get_if<EpaBaseline>(&spec.solver)) {
    return epa_profile(network, spec.grid, epa->level.value_or(spec.grid.p_max()));
  }
  if (std::holds_alternative<SncpcBaseline>(spec.solver)) {
    SncpcResult r = sncpc_solve(network, spec.grid, prior, spec.max_iterations);
    converged = r.converged;
    return std::move(r.profile);
  }
  const auto& nash = std::get<FullCsiNash>(spec.solver);
  try {
    return solve_nash_full_csi(network, spec.grid, spec.max_iterations, nash.epsilon)
        .profile;
  } catch (const ConvergenceError& e) {
    converged = false;
    return e.trace().back();
  }
}

TrialOutcome score_trial(const ScenarioSpec& spec, const NetworkState& network,
                         const PowerProfile& profile) {
  const std::size_t scoped = spec.tagged_gain ? 1 : network.size();
  TrialOutcome out;
  for (std::size_t i = 0; i < scoped; ++i) {
    const bool covered =
        sinr_at(network, profile.powers, i) >= network.node(i).sinr_threshold;
    out.coverage += covered ? 1.0 : 0.0;
    out.power += profile.powers[i] / spec.grid.p_max();
  }
  out.coverage /= static_cast<double>(scoped);
  out.power /= static_cast<double>(scoped);
  return out;
}

TrialOutcome run_trial(const ScenarioSpec& spec, std::uint64_t trial) {
  const NetworkState network = trial_network(spec, draw_trial(spec, trial));
  bool converged = true;
  const PowerProfile profile = solve_trial(spec, network, converged);
  TrialOutcome out = score_trial(spec, network, profile);
  out.converged = converged;
  return out;
}

ScenarioMetrics run_scenario(const ScenarioSpec& spec) {
  spec.validate();
  const auto trials = static_cast<std::size_t>(spec.trials);
  std::vector<TrialOutcome> outcomes(trials);

  auto work = [&](std::size_t worker, std::size_t stride) {
    for (std::size_t t = worker; t < trials; t += stride) {
      outcomes[t] = run_trial(spec, t);
    }
  };
  const auto workers =
      std::min<std::size_t>(static_cast<std::size_t>(spec.workers), trials);
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          work(w, workers);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<double> coverage(trials);
  std::vector<double> power(trials);
  ScenarioMetrics m;
  for (std::size_t t = 0; t < trials; ++t) {
    coverage[t] = outcomes[t].coverage;
    power[t] = outcomes[t].power;
    if (!outcomes[t].converged) ++m.nonconverged;
  }
  const MeanCi cov = mean_ci(coverage);
  const MeanCi pow = mean_ci(power);
  m.coverage = cov.mean;
  m.outage = 1.0 - cov.mean;
  m.coverage_ci = cov.ci;
  m.avg_power = pow.mean;
  m.power_ci = pow.ci;
  m.trials_run = spec.trials;
  m.warning = m.nonconverged * 100 > spec.trials;
  return m;
}

std::vector<GainSweepRow> sweep_fig3(const ScenarioSpec& base,
                                     const std::vector<double>& gains,
                                     const std::vector<double>& thresholds_db) {
  if (gains.empty() || thresholds_db.empty()) {
    throw std::invalid_argument("sweep lists must be non-empty");
  }
  std::vector<GainSweepRow> rows;
  for (double th : thresholds_db) {
    for (double g : gains) {
      const ScenarioMetrics m = run_scenario(with_threshold_and_gain(base, g, th));
      rows.push_back({g, th, m.avg_power, m.power_ci, m});
    }
  }
  return rows;
}

std::vector<GainSweepRow> sweep_fig4(const ScenarioSpec& base,
                                     const std::vector<double>& gains,
                                     const std::vector<double>& thresholds_db) {
  if (gains.empty() || thresholds_db.empty()) {
    throw std::invalid_argument("sweep lists must be non-empty");
  }
  std::vector<GainSweepRow> rows;
  for (double th : thresholds_db) {
    for (double g : gains) {
      const ScenarioMetrics m = run_scenario(with_threshold_and_gain(base, g, th));
      rows.push_back({g, th, m.coverage, m.coverage_ci, m});
    }
  }
  return rows;
}

namespace {

template <class Metric>
std::vector<FractionSweepRow> fraction_sweep(const ScenarioSpec& base,
                                             const std::vector<double>& fractions,
                                             const std::vector<SolverChoice>& policies,
                                             Metric metric) {
  if (fractions.empty() || policies.empty()) {
    throw std::invalid_argument("sweep lists must be non-empty");
  }
  std::vector<FractionSweepRow> rows;
  for (double f : fractions) {
    for (const SolverChoice& policy : policies) {
      ScenarioSpec spec = base;
      spec.interference_fraction = f;
      spec.solver = policy;
      spec.tagged_gain.reset();
      const ScenarioMetrics m = run_scenario(spec);
      const auto [value, ci] = metric(m);
      rows.push_back({100.0 * f, solver_name(policy), value, ci, m});
    }
  }
  return rows;
}

}  // namespace

std::vector<FractionSweepRow> sweep_fig5(const ScenarioSpec& base,
                                         const std::vector<double>& fractions,
                                         const std::vector<SolverChoice>& policies) {
  return fraction_sweep(base, fractions, policies, [](const ScenarioMetrics& m) {
    return std::pair{m.outage, m.coverage_ci};
  });
}

std::vector<FractionSweepRow> sweep_fig6(const ScenarioSpec& base,
                                         const std::vector<double>& fractions,
                                         const std::vector<SolverChoice>& policies) {
  return fraction_sweep(base, fractions, policies, [](const ScenarioMetrics& m) {
    return std::pair{m.avg_power, m.power_ci};
  });
}

}  // namespace epibg
