#include "epibg/epistemic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>

namespace epibg {

namespace {

struct InterferenceSums {
  double sum = 0.0;
  double sum_sq = 0.0;
  int count = 0;

  void add(double p) {
    if (p <= 0.0) return;
    sum += p;
    sum_sq += p * p;
    ++count;
  }
  void remove(double p) {
    if (p <= 0.0) return;
    sum -= p;
    sum_sq -= p * p;
    --count;
  }
};

InterferenceSums sums_excluding(const NodeBeliefs& beliefs, std::size_t a,
                                std::size_t b) {
  InterferenceSums s;
  for (std::size_t j = 0; j < beliefs.believed.size(); ++j) {
    if (j == a || j == b) continue;
    s.add(beliefs.believed[j]);
  }
  return s;
}

// E[(Y + eta)^-k]; an empty interferer set bypasses the Gamma fit.
SeriesResult inverse_moment(const InterferenceSums& sums, double lambda,
                            double eta, const EpistemicPolicy& policy) {
  if (sums.count == 0 || !(sums.sum > 0.0) || !(sums.sum_sq > 0.0)) {
    return {std::pow(eta, -policy.moment_order), false, 0};
  }
  GammaInterferenceModel model = fit_gamma_mme_sums(sums.sum, sums.sum_sq, lambda);
  model.eta = eta;
  return inverse_shifted_moment(model, policy.moment_order, policy.truncation);
}

// Lowest grid level whose statistic meets the threshold, searched outward
// from `start` (the evidence of the previous stage). Relies on the statistic
// being nondecreasing in power. Galloping and bisection never probe a level
// twice: bisection midpoints lie strictly between the bracketing probes.
template <class Statistic>
void select_from(const PowerGrid& grid, std::size_t start, double threshold,
                 Statistic&& statistic, bool record, BeliefStage& stage) {
  struct Probe {
    std::size_t level;
    double stat;
  };
  // Galloping plus bisection over a grid of at most 2^64 levels needs well
  // under 160 probes.
  std::array<Probe, 160> probes;
  std::size_t probe_count = 0;
  double hi_stat = 0.0;
  double last_stat = 0.0;
  const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(grid.size()) - 1;
  auto meets = [&](std::ptrdiff_t level) {
    const double s = statistic(grid.level(static_cast<std::size_t>(level)));
    if (record) probes[probe_count++] = {static_cast<std::size_t>(level), s};
    if (level == last) last_stat = s;
    if (s >= threshold) {
      hi_stat = s;
      return true;
    }
    return false;
  };

  std::ptrdiff_t lo = -1;  // known not to meet (or below the grid)
  std::ptrdiff_t hi = -1;  // known to meet
  const auto s = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(start), last);
  if (meets(s)) {
    hi = s;
    std::ptrdiff_t step = 1;
    while (hi > 0) {
      const std::ptrdiff_t cand = std::max<std::ptrdiff_t>(hi - step, 0);
      if (meets(cand)) {
        hi = cand;
        step *= 2;
      } else {
        lo = cand;
        break;
      }
    }
  } else {
    lo = s;
    std::ptrdiff_t step = 1;
    while (lo < last) {
      const std::ptrdiff_t cand = std::min(lo + step, last);
      if (meets(cand)) {
        hi = cand;
        break;
      }
      lo = cand;
      step *= 2;
    }
  }
  if (hi >= 0) {
    double best = hi_stat;
    while (hi - lo > 1) {
      const std::ptrdiff_t mid = lo + (hi - lo) / 2;
      if (meets(mid)) {
        hi = mid;
        best = hi_stat;
      } else {
        lo = mid;
      }
    }
    stage.chosen_power = grid.level(static_cast<std::size_t>(hi));
    stage.statistic = best;
    stage.accepted_evidence = Hypothesis{stage.chosen_power, stage.statistic};
    stage.infeasible = false;
  } else {
    stage.chosen_power = grid.p_max();
    stage.statistic = last_stat;
    stage.accepted_evidence.reset();
    stage.infeasible = true;
  }
  if (record) {
    const auto evaluated = std::span(probes).first(probe_count);
    std::sort(evaluated.begin(), evaluated.end(),
              [](const Probe& a, const Probe& b) { return a.level < b.level; });
    stage.hypotheses.reserve(evaluated.size());
    for (const Probe& p : evaluated) {
      stage.hypotheses.push_back({grid.level(p.level), p.stat});
    }
  }
}

std::size_t level_or_throw(const PowerGrid& grid, double power) {
  auto idx = grid.index_of(power);
  if (!idx) throw std::invalid_argument("belief power is not a grid level");
  return *idx;
}

BeliefStage inter_with_sums(const EngineContext& ctx, const NodeBeliefs& beliefs,
                            std::size_t opponent, int opponent_id,
                            const InterferenceSums& others, std::size_t start_level,
                            EvaluationCounter& counter) {
  const EpistemicPolicy& policy = ctx.policy;
  const int k = policy.moment_order;
  const double eta =
      shift_eta(ShiftRole::inter, ctx.noise_power, beliefs.own_gain, beliefs.own_power);
  const SeriesResult inv = inverse_moment(others, ctx.prior.lambda(), eta, policy);

  BeliefStage stage;
  stage.role = StageRole::inter;
  stage.observer = beliefs.self_id;
  stage.target_node = opponent_id;
  stage.series_truncated = inv.truncated_at_optimal_order;
  bool clamped = false;
  auto statistic = [&](double p) {
    ++counter.count;
    const GeneralizedMean g =
        generalized_mean(k, sinr_raw_moment(k, ctx.prior, p, inv.value));
    clamped = clamped || g.clamped;
    return g.value;
  };
  select_from(*ctx.grid, start_level, ctx.thresholds.at(opponent), statistic,
              ctx.record_hypotheses, stage);
  stage.statistic_clamped = clamped;
  return stage;
}

BeliefStage intra_with_sums(const EngineContext& ctx, const NodeBeliefs& beliefs,
                            const InterferenceSums& opponents, std::size_t start_level,
                            EvaluationCounter& counter) {
  const EpistemicPolicy& policy = ctx.policy;
  const int k = policy.moment_order;
  const double eta = shift_eta(ShiftRole::intra, ctx.noise_power, beliefs.own_gain,
                               beliefs.own_power);
  const SeriesResult inv = inverse_moment(opponents, ctx.prior.lambda(), eta, policy);

  BeliefStage stage;
  stage.role = StageRole::intra;
  stage.observer = beliefs.self_id;
  stage.target_node = beliefs.self_id;
  stage.series_truncated = inv.truncated_at_optimal_order;
  bool clamped = false;
  auto statistic = [&](double p) {
    ++counter.count;
    const GeneralizedMean g = generalized_mean(
        k, sinr_raw_moment_known_gain(k, beliefs.own_gain, p, inv.value));
    clamped = clamped || g.clamped;
    return g.value;
  };
  select_from(*ctx.grid, start_level, ctx.thresholds.at(beliefs.self), statistic,
              ctx.record_hypotheses, stage);
  stage.statistic_clamped = clamped;
  return stage;
}

void check_context(const EngineContext& ctx, const NodeBeliefs& beliefs) {
  if (ctx.grid == nullptr) throw std::invalid_argument("engine context has no grid");
  ctx.policy.validate();
  if (beliefs.believed.size() != ctx.thresholds.size()) {
    throw std::invalid_argument("belief vector does not match the network size");
  }
  if (beliefs.self >= beliefs.believed.size()) {
    throw std::invalid_argument("self index outside the network");
  }
}

}  // namespace

void EpistemicPolicy::validate() const {
  if (moment_order < 1 || moment_order > 4) {
    throw std::invalid_argument("moment order must be in 1..4");
  }
  if (truncation < 0) throw std::invalid_argument("truncation must be >= 0");
}

std::string_view to_string(StageRole role) {
  return role == StageRole::inter ? "inter" : "intra";
}

GeneralizedMean generalized_mean(int k, double raw_moment_k) {
  if (k < 1) throw std::invalid_argument("moment order must be >= 1");
  if (raw_moment_k < 0.0) return {0.0, true};
  if (k == 1) return {raw_moment_k, false};
  return {std::pow(raw_moment_k, 1.0 / k), false};
}

GeneralizedMean policy_statistic(int k, const MomentVector& raw_moments) {
  if (k > raw_moments.k_max()) {
    throw std::invalid_argument("moment vector does not reach order k");
  }
  return generalized_mean(k, raw_moments.raw(k));
}

std::optional<Hypothesis> conditional_belief_select(
    std::span<const Hypothesis> hypotheses, double threshold) {
  for (const Hypothesis& h : hypotheses) {
    if (h.statistic >= threshold) return h;
  }
  return std::nullopt;
}

BeliefStage inter_update(const EngineContext& ctx, const NodeBeliefs& beliefs,
                         std::size_t opponent, int opponent_id,
                         std::size_t start_level, EvaluationCounter& counter) {
  check_context(ctx, beliefs);
  if (opponent >= beliefs.believed.size() || opponent == beliefs.self) {
    throw std::invalid_argument("invalid opponent index");
  }
  const InterferenceSums others = sums_excluding(beliefs, beliefs.self, opponent);
  return inter_with_sums(ctx, beliefs, opponent, opponent_id, others, start_level,
                         counter);
}

BeliefStage intra_update(const EngineContext& ctx, const NodeBeliefs& beliefs,
                         std::size_t start_level, EvaluationCounter& counter) {
  check_context(ctx, beliefs);
  const InterferenceSums opponents =
      sums_excluding(beliefs, beliefs.self, beliefs.self);
  return intra_with_sums(ctx, beliefs, opponents, start_level, counter);
}

EpistemicTrace run_epistemic_game(const NetworkState& network,
                                  const PowerGrid& grid,
                                  const RayleighPrior& prior,
                                  const EpistemicPolicy& policy,
                                  const EngineOptions& options) {
  policy.validate();
  if (options.max_stages < 1) throw std::invalid_argument("max_stages must be >= 1");
  const std::size_t n = network.size();
  const std::size_t seed_level = options.seed_level.value_or(grid.size() - 1);
  if (seed_level >= grid.size()) throw std::invalid_argument("seed level outside the grid");
  const double seed_power = grid.level(seed_level);

  EngineContext ctx;
  ctx.grid = &grid;
  ctx.prior = prior;
  ctx.policy = policy;
  ctx.noise_power = network.noise_power();
  ctx.thresholds.resize(n);
  for (std::size_t i = 0; i < n; ++i) ctx.thresholds[i] = network.node(i).sinr_threshold;
  ctx.record_hypotheses = options.detail == TraceDetail::hypotheses;

  // Opponents are visited in ascending id.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return network.node(a).id < network.node(b).id;
  });

  std::vector<NodeBeliefs> engines(n);
  std::vector<std::vector<std::size_t>> belief_levels(n);
  std::vector<std::size_t> own_levels(n, seed_level);
  for (std::size_t i = 0; i < n; ++i) {
    engines[i].self = i;
    engines[i].self_id = network.node(i).id;
    engines[i].own_gain = network.node(i).gain;
    engines[i].own_power = seed_power;
    engines[i].believed.assign(n, seed_power);
    belief_levels[i].assign(n, seed_level);
  }

  EpistemicTrace trace;
  trace.infeasible.assign(n, false);
  trace.final_statistic.assign(n, 0.0);
  trace.node_evaluations.assign(n, 0);
  EvaluationCounter counter;
  const bool keep_stages = options.detail != TraceDetail::summary;

  for (int pass = 0; pass < options.max_stages; ++pass) {
    bool changed = false;
    for (std::size_t i : order) {
      NodeBeliefs& b = engines[i];
      const std::uint64_t before = counter.count;
      InterferenceSums all = sums_excluding(b, i, i);
      int m = 0;
      for (std::size_t j : order) {
        if (j == i) continue;
        ++m;
        InterferenceSums others = all;
        others.remove(b.believed[j]);
        BeliefStage stage = inter_with_sums(ctx, b, j, network.node(j).id, others,
                                            belief_levels[i][j], counter);
        stage.l = pass;
        stage.m = m;
        if (stage.chosen_power != b.believed[j]) {
          all.remove(b.believed[j]);
          all.add(stage.chosen_power);
          b.believed[j] = stage.chosen_power;
          belief_levels[i][j] = level_or_throw(grid, stage.chosen_power);
          changed = true;
        }
        if (keep_stages) trace.stages.push_back(std::move(stage));
      }
      // Fresh sums so rounding from the incremental updates does not carry
      // into the self-update.
      all = sums_excluding(b, i, i);
      BeliefStage stage = intra_with_sums(ctx, b, all, own_levels[i], counter);
      stage.l = pass + 1;
      stage.m = m;
      if (stage.chosen_power != b.own_power) {
        b.own_power = stage.chosen_power;
        own_levels[i] = level_or_throw(grid, stage.chosen_power);
        changed = true;
      }
      trace.infeasible[i] = stage.infeasible;
      trace.final_statistic[i] = stage.statistic;
      if (keep_stages) trace.stages.push_back(std::move(stage));
      trace.node_evaluations[i] += counter.count - before;
    }
    trace.passes = pass + 1;
    if (!changed) {
      trace.converged = true;
      break;
    }
  }

  trace.eu_evaluations = counter.count;
  trace.final_profile.powers.resize(n);
  for (std::size_t i = 0; i < n; ++i) trace.final_profile.powers[i] = engines[i].own_power;
  return trace;
}

StageRecord to_record(const BeliefStage& stage) {
  return {stage.l,           stage.m,         stage.role,
          stage.observer,    stage.target_node, stage.chosen_power,
          stage.statistic,   stage.infeasible, stage.statistic_clamped,
          stage.series_truncated};
}

}  // namespace epibg
