#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "epibg/game_model.hpp"
#include "epibg/stats_core.hpp"

namespace epibg {

/// Moment-order decision rule M_k: a hypothesis is accepted when the
/// generalized mean (m_{k,gamma})^(1/k) of its SINR payoff reaches the target
/// threshold. Ties go to the lowest power.
struct EpistemicPolicy {
  int moment_order = 1;
  int truncation = kDefaultTruncation;

  void validate() const;
};

enum class StageRole { inter, intra };

std::string_view to_string(StageRole role);

struct Hypothesis {
  double power = 0.0;
  double statistic = 0.0;
};

/// One belief update made by `observer` about `target_node`.
struct BeliefStage {
  int l = 0;
  int m = 0;
  StageRole role = StageRole::intra;
  int observer = 0;
  int target_node = 0;
  /// Hypotheses actually evaluated, in ascending power. The statistic is
  /// monotone in power, so unevaluated grid levels cannot change the choice.
  std::vector<Hypothesis> hypotheses;
  std::optional<Hypothesis> accepted_evidence;
  double chosen_power = 0.0;
  /// Statistic of the chosen power (of p_max when infeasible).
  double statistic = 0.0;
  bool infeasible = false;
  bool statistic_clamped = false;
  bool series_truncated = false;
};

struct GeneralizedMean {
  double value = 0.0;
  bool clamped = false;
};

/// (m_k)^(1/k) of the k-th raw moment. A negative m_k (series truncation
/// artefact) is clamped to 0 and flagged.
GeneralizedMean generalized_mean(int k, double raw_moment_k);

/// policy_statistic over a moment vector: (raw(k))^(1/k).
GeneralizedMean policy_statistic(int k, const MomentVector& raw_moments);

/// First hypothesis (ascending power) whose statistic reaches `threshold`.
std::optional<Hypothesis> conditional_belief_select(
    std::span<const Hypothesis> hypotheses, double threshold);

/// What an engine is allowed to know: the common prior, the network-wide
/// noise power and thresholds, and the strategy grid. Opponent gains are not
/// part of it.
struct EngineContext {
  const PowerGrid* grid = nullptr;
  RayleighPrior prior = RayleighPrior::from_sigma(1.0);
  EpistemicPolicy policy;
  double noise_power = 1.0;
  std::vector<double> thresholds;  // per network position
  bool record_hypotheses = false;
};

/// Belief state of one node: its own committed power and its believed powers
/// for every opponent (entry at its own position unused).
struct NodeBeliefs {
  std::size_t self = 0;
  int self_id = 0;
  double own_gain = 0.0;
  double own_power = 0.0;
  std::vector<double> believed;
};

/// Counts payoff-statistic evaluations (sinr_raw_moment invocations).
struct EvaluationCounter {
  std::uint64_t count = 0;
};

/// Hypotheses over opponent `opponent`'s power, seen from `beliefs.self`:
/// numerator gain from the prior, interference from the other believed
/// powers, eta = |g_i|^2 p_i^l + noise. `start_level` warm-starts the
/// search at the previous evidence.
BeliefStage inter_update(const EngineContext& ctx, const NodeBeliefs& beliefs,
                         std::size_t opponent, int opponent_id,
                         std::size_t start_level, EvaluationCounter& counter);

/// Hypotheses over the node's own next power with its known gain,
/// interference from the believed opponent powers, eta = noise.
BeliefStage intra_update(const EngineContext& ctx, const NodeBeliefs& beliefs,
                         std::size_t start_level, EvaluationCounter& counter);

enum class TraceDetail { summary, stages, hypotheses };

struct EngineOptions {
  int max_stages = 1000;
  /// Grid index of the seed action p^(0,0) and of the initial beliefs;
  /// defaults to p_max.
  std::optional<std::size_t> seed_level;
  TraceDetail detail = TraceDetail::stages;
};

struct EpistemicTrace {
  std::vector<BeliefStage> stages;
  std::uint64_t eu_evaluations = 0;
  /// Evaluations made by each node's own engine; sums to eu_evaluations.
  std::vector<std::uint64_t> node_evaluations;
  bool converged = false;
  int passes = 0;
  PowerProfile final_profile;
  std::vector<bool> infeasible;
  /// Statistic of each node's final intra decision.
  std::vector<double> final_statistic;
};

/// Every node runs an inter sweep over its opponents (ascending id) followed
/// by an intra self-update; passes repeat until one changes no chosen power
/// and no belief. Gains of other nodes never reach a node's updates.
EpistemicTrace run_epistemic_game(const NetworkState& network,
                                  const PowerGrid& grid,
                                  const RayleighPrior& prior,
                                  const EpistemicPolicy& policy,
                                  const EngineOptions& options = {});

/// Flat stage record for CSV export.
struct StageRecord {
  int l;
  int m;
  StageRole role;
  int observer;
  int target;
  double chosen_power;
  double statistic;
  bool infeasible;
  bool clamped;
  bool truncated;
};

StageRecord to_record(const BeliefStage& stage);

}  // namespace epibg
