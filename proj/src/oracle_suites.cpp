#include "epibg/testing/oracle_suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/gamma.hpp>

#include "epibg/testing/oracles.hpp"

namespace epibg::testing {

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

std::string format(const char* fmt, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

// Random network of `n` nodes with Rayleigh(1) gains and thresholds spread
// over [-10, 5] dB; roughly a third of the draws leave some node infeasible.
NetworkState random_network(std::mt19937_64& rng, int n, double noise) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<NodeConfig> nodes;
  for (int i = 0; i < n; ++i) {
    const double gain = std::sqrt(-2.0 * std::log1p(-u(rng)));
    const double threshold_db = -10.0 + 15.0 * u(rng);
    nodes.push_back({i, gain, std::pow(10.0, threshold_db / 10.0)});
  }
  return NetworkState(std::move(nodes), noise);
}

PowerGrid random_grid(std::mt19937_64& rng, std::size_t levels) {
  std::uniform_real_distribution<double> u(0.5, 2.0);
  return PowerGrid::linear(u(rng), levels);
}

// Statistic of the k-th SINR moment for one hypothesis, built directly from
// an explicit power list rather than from running sums.
double table_statistic(int k, int truncation, const RayleighPrior& prior,
                       const std::vector<double>& interferers, double eta,
                       double power, const double* known_gain) {
  double inv = 0.0;
  if (interferers.empty()) {
    inv = std::pow(eta, -k);
  } else {
    GammaInterferenceModel model = fit_gamma_mme(interferers, prior.lambda());
    model.eta = eta;
    inv = inverse_shifted_moment(model, k, truncation).value;
  }
  const double raw = known_gain != nullptr
                         ? std::pow(*known_gain * *known_gain * power, k) * inv
                         : std::pow(power, k) * factorial(k) / std::pow(prior.lambda(), k) * inv;
  return generalized_mean(k, raw).value;
}

// Lowest level of a full table meeting the threshold; p_max when none.
double table_choice(const PowerGrid& grid, double threshold,
                    const std::vector<double>& table) {
  for (std::size_t s = 0; s < table.size(); ++s) {
    if (table[s] >= threshold) return grid.level(s);
  }
  return grid.p_max();
}

}  // namespace

SuiteResult erlang_exactness_suite(int cases, std::uint64_t seed) {
  Stopwatch clock;
  SuiteResult r{"erlang_exactness", true, "", 0.0};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(1, 40);
  double worst = 0.0;
  for (int c = 0; c < cases; ++c) {
    const int n = count(rng);
    const double p = log_uniform(rng, 1e-3, 1e3);
    const double lambda = log_uniform(rng, 1e-2, 1e2);
    const std::vector<double> powers(static_cast<std::size_t>(n), p);
    const GammaInterferenceModel fit = fit_gamma_mme(powers, lambda);
    const boost::math::gamma_distribution<double> fitted(fit.alpha_hat, fit.theta_hat);
    const boost::math::gamma_distribution<double> exact(n, p / lambda);
    for (int q = 1; q <= 99; ++q) {
      const double x = boost::math::quantile(exact, q / 100.0);
      const double err = std::abs(boost::math::cdf(fitted, x) - erlang_cdf(n, p / lambda, x));
      worst = std::max(worst, err);
    }
  }
  r.passed = worst <= 1e-9;
  r.detail = std::to_string(cases) + " cases x 99 quantiles, max |cdf error| = " +
             format("%.3g", worst) + " (tol 1e-9)";
  r.seconds = clock.seconds();
  return r;
}

SuiteResult series_vs_quadrature_suite(int models, std::uint64_t seed) {
  Stopwatch clock;
  SuiteResult r{"series_vs_quadrature", true, "", 0.0};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> alpha_dist(2.0, 64.0);
  std::uniform_real_distribution<double> shift_dist(10.0, 100.0);
  double worst = 0.0;
  int failures = 0;
  std::string first_failure;
  for (int i = 0; i < models; ++i) {
    GammaInterferenceModel m;
    m.alpha_hat = alpha_dist(rng);
    m.theta_hat = log_uniform(rng, 1e-3, 1e3);
    m.lambda = 1.0;
    m.eta = m.mean() * shift_dist(rng);
    try {
      const double series = expected_inverse_shifted(m, 8).value;
      const double oracle = quadrature_oracle_inverse_moment(m, 1).value;
      const double rel = std::abs(series - oracle) / std::abs(oracle);
      worst = std::max(worst, rel);
      if (!(rel <= 1e-6)) {
        ++failures;
        if (first_failure.empty()) {
          first_failure = format("; first failure alpha=%.4g theta=%.4g", m.alpha_hat,
                                 m.theta_hat) +
                          format(" eta=%.4g", m.eta);
        }
      }
    } catch (const std::exception& e) {
      ++failures;
      if (first_failure.empty()) first_failure = std::string("; ") + e.what();
    }
  }
  r.passed = failures == 0;
  r.detail = std::to_string(models) + " models (alpha in [2,64], eta/E[Y] in [10,100], order 8)," +
             " max rel error = " + format("%.3g", worst) + " (tol 1e-6), failures = " +
             std::to_string(failures) + first_failure;
  r.seconds = clock.seconds();
  return r;
}

SuiteResult epsilon_nash_suite(int networks, std::uint64_t seed) {
  Stopwatch clock;
  SuiteResult r{"epsilon_nash", true, "", 0.0};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> node_count(1, 4);
  std::uniform_int_distribution<int> level_count(1, 21);
  int failures = 0;
  int infeasible_nodes = 0;
  std::string first_failure;
  for (int t = 0; t < networks; ++t) {
    const NetworkState net = random_network(rng, node_count(rng), 0.05);
    const PowerGrid grid = random_grid(rng, static_cast<std::size_t>(level_count(rng)));
    try {
      const NashSolution sol = solve_nash_full_csi(net, grid, 1000, 0.0);
      const NashCheck check = verify_epsilon_nash(net, grid, sol.profile, 0.0);
      for (bool f : sol.feasible) infeasible_nodes += f ? 0 : 1;
      if (!check.ok) {
        ++failures;
        if (first_failure.empty()) {
          first_failure = "; network " + std::to_string(t) + " node " +
                          std::to_string(check.violating_node.value_or(-1)) + " deviates";
        }
      }
    } catch (const std::exception& e) {
      ++failures;
      if (first_failure.empty()) first_failure = std::string("; ") + e.what();
    }
  }
  r.passed = failures == 0;
  r.detail = std::to_string(networks) + " networks (N <= 4, S <= 21), violations = " +
             std::to_string(failures) + ", infeasible nodes seen = " +
             std::to_string(infeasible_nodes) + first_failure;
  r.seconds = clock.seconds();
  return r;
}

ReplayResult exhaustive_replay(const NetworkState& network, const PowerGrid& grid,
                               double sigma, const EpistemicPolicy& policy,
                               int max_stages) {
  const RayleighPrior prior = RayleighPrior::from_sigma(sigma);
  const std::size_t n = network.size();
  const int k = policy.moment_order;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return network.node(a).id < network.node(b).id;
  });

  std::vector<std::vector<double>> believed(n, std::vector<double>(n, grid.p_max()));
  std::vector<double> own(n, grid.p_max());
  ReplayResult out;
  for (int pass = 0; pass < max_stages; ++pass) {
    bool changed = false;
    for (std::size_t i : order) {
      const double g = network.node(i).gain;
      for (std::size_t j : order) {
        if (j == i) continue;
        std::vector<double> interferers;
        for (std::size_t q : order) {
          if (q != i && q != j && believed[i][q] > 0.0) interferers.push_back(believed[i][q]);
        }
        const double eta = g * g * own[i] + network.noise_power();
        std::vector<double> table;
        for (double p : grid.levels()) {
          table.push_back(table_statistic(k, policy.truncation, prior, interferers, eta, p, nullptr));
        }
        const double choice = table_choice(grid, network.node(j).sinr_threshold, table);
        out.stage_choices.push_back(choice);
        if (choice != believed[i][j]) {
          believed[i][j] = choice;
          changed = true;
        }
      }
      std::vector<double> interferers;
      for (std::size_t q : order) {
        if (q != i && believed[i][q] > 0.0) interferers.push_back(believed[i][q]);
      }
      std::vector<double> table;
      for (double p : grid.levels()) {
        table.push_back(table_statistic(k, policy.truncation, prior, interferers,
                                        network.noise_power(), p, &g));
      }
      const double choice = table_choice(grid, network.node(i).sinr_threshold, table);
      out.stage_choices.push_back(choice);
      if (choice != own[i]) {
        own[i] = choice;
        changed = true;
      }
    }
    if (!changed) {
      out.converged = true;
      break;
    }
  }
  out.final_profile.powers = own;
  return out;
}

SelectionReport selection_equivalence_suite(int networks_per_shape,
                                            std::uint64_t seed) {
  Stopwatch clock;
  SelectionReport report;
  report.selection = {"selection_equivalence", true, "", 0.0};
  report.complexity = {"evaluation_complexity", true, "", 0.0};
  std::mt19937_64 rng(seed);
  const EpistemicPolicy policy{1, kDefaultTruncation};
  int instances = 0;
  int mismatches = 0;
  int bound_violations = 0;
  double worst_ratio = 0.0;
  std::string first_failure;
  for (int n = 1; n <= 3; ++n) {
    for (int s = 1; s <= 7; ++s) {
      for (int t = 0; t < networks_per_shape; ++t) {
        ++instances;
        const NetworkState net = random_network(rng, n, 0.05);
        const PowerGrid grid = random_grid(rng, static_cast<std::size_t>(s));
        EngineOptions opts;
        opts.max_stages = 200;
        const EpistemicTrace trace =
            run_epistemic_game(net, grid, RayleighPrior::from_sigma(1.0), policy, opts);
        const ReplayResult replay = exhaustive_replay(net, grid, 1.0, policy, 200);
        std::vector<double> engine_choices;
        for (const BeliefStage& st : trace.stages) engine_choices.push_back(st.chosen_power);
        if (engine_choices != replay.stage_choices ||
            trace.final_profile.powers != replay.final_profile.powers ||
            trace.converged != replay.converged) {
          ++mismatches;
          if (first_failure.empty()) {
            first_failure = "; first mismatch at N=" + std::to_string(n) +
                            " S=" + std::to_string(s);
          }
        }
        const double bound = static_cast<double>(n) * n * std::pow(s, 2 * n);
        const double ratio = static_cast<double>(trace.eu_evaluations) / bound;
        worst_ratio = std::max(worst_ratio, ratio);
        if (ratio > 1.0) ++bound_violations;
      }
    }
  }
  const double elapsed = clock.seconds();
  report.selection.passed = mismatches == 0;
  report.selection.detail = std::to_string(instances) +
                            " instances (N <= 3, S <= 7, k = 1), mismatches = " +
                            std::to_string(mismatches) + first_failure;
  report.selection.seconds = elapsed;
  report.complexity.passed = bound_violations == 0;
  report.complexity.detail = std::to_string(instances) +
                             " instances, max eu_evaluations / (N^2 S^(2N)) = " +
                             format("%.3g", worst_ratio) + ", violations = " +
                             std::to_string(bound_violations);
  report.complexity.seconds = elapsed;
  return report;
}

}  // namespace epibg::testing
