#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "epibg/baselines.hpp"
#include "epibg/epistemic.hpp"
#include "epibg/game_model.hpp"

namespace epibg {

/// Power ratio conversions (10 log10).
double db_to_linear(double db);
double linear_to_db(double linear);

struct FullCsiNash {
  double epsilon = 0.0;
};

using SolverChoice =
    std::variant<EpistemicPolicy, EpaBaseline, SncpcBaseline, FullCsiNash>;

/// Solver label as used in CSV output: M1..M4, EPA, SNCPC, NASH.
std::string solver_name(const SolverChoice& solver);
/// Inverse of solver_name with default parameters; throws on unknown names.
SolverChoice parse_solver(const std::string& name, int truncation = kDefaultTruncation);

struct ScenarioSpec {
  int n_nodes = 100;
  double rayleigh_sigma = 1.0;
  double noise_power = 1e-12;  // -120 dB
  PowerGrid grid = PowerGrid::linear(1.0, 1001);
  /// Uniform SINR threshold (linear); node_thresholds overrides per node.
  double threshold = 0.01;  // -20 dB
  std::vector<double> node_thresholds;
  /// Share of the population transmitting as interferers besides the
  /// desired node 0.
  double interference_fraction = 1.0;
  SolverChoice solver = EpistemicPolicy{};
  int trials = 10000;
  std::uint64_t seed = 1;
  /// When set, node 0's gain is fixed to this value and metrics describe
  /// node 0 only; otherwise they average over all transmitting nodes.
  std::optional<double> tagged_gain;
  /// Iteration budget for the configured solver (passes, rounds or
  /// iterations).
  int max_iterations = 1000;
  int workers = 1;

  void validate() const;
  double threshold_of(int node) const;
  /// ceil(fraction * n_nodes), capped at n_nodes - 1.
  int interferer_count() const;
};

struct ScenarioMetrics {
  double coverage = 0.0;
  double outage = 0.0;
  double avg_power = 0.0;  // normalized by p_max
  /// 95% normal-approximation half-widths over trials.
  double coverage_ci = 0.0;
  double power_ci = 0.0;
  int trials_run = 0;
  int nonconverged = 0;
  /// More than 1% of trials hit the iteration budget.
  bool warning = false;
};

/// Channel draw of one trial: gains of the transmitting nodes, node 0 first.
struct TrialRealization {
  std::vector<int> ids;
  std::vector<double> gains;
};

TrialRealization draw_trial(const ScenarioSpec& spec, std::uint64_t trial);
NetworkState trial_network(const ScenarioSpec& spec, const TrialRealization& draw);

struct TrialOutcome {
  double coverage = 0.0;  // fraction of scoped nodes meeting their threshold
  double power = 0.0;     // mean normalized power over scoped nodes
  bool converged = true;
};

/// Chosen powers of the configured solver; `converged` reports whether the
/// iteration budget sufficed.
PowerProfile solve_trial(const ScenarioSpec& spec, const NetworkState& network,
                         bool& converged);

/// Coverage and power of one solved trial under the spec's metric scope.
TrialOutcome score_trial(const ScenarioSpec& spec, const NetworkState& network,
                         const PowerProfile& profile);

TrialOutcome run_trial(const ScenarioSpec& spec, std::uint64_t trial);

/// Trials are independent; per-trial streams come from (seed, trial index)
/// and aggregation runs in trial order, so results do not depend on workers.
ScenarioMetrics run_scenario(const ScenarioSpec& spec);

struct GainSweepRow {
  double gain = 0.0;
  double threshold_db = 0.0;
  double metric = 0.0;
  double ci = 0.0;
  ScenarioMetrics metrics;
};

struct FractionSweepRow {
  double interference_pct = 0.0;
  std::string policy;
  double metric = 0.0;
  double ci = 0.0;
  ScenarioMetrics metrics;
};

/// Average power of the desired node per (gain, threshold).
std::vector<GainSweepRow> sweep_fig3(const ScenarioSpec& base,
                                     const std::vector<double>& gains,
                                     const std::vector<double>& thresholds_db);
/// Coverage of the desired node per (gain, threshold).
std::vector<GainSweepRow> sweep_fig4(const ScenarioSpec& base,
                                     const std::vector<double>& gains,
                                     const std::vector<double>& thresholds_db);
/// Network outage per (interference fraction, policy).
std::vector<FractionSweepRow> sweep_fig5(const ScenarioSpec& base,
                                         const std::vector<double>& fractions,
                                         const std::vector<SolverChoice>& policies);
/// Network average power per (interference fraction, policy).
std::vector<FractionSweepRow> sweep_fig6(const ScenarioSpec& base,
                                         const std::vector<double>& fractions,
                                         const std::vector<SolverChoice>& policies);

}  // namespace epibg
