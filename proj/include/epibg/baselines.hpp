#pragma once

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "epibg/game_model.hpp"
#include "epibg/stats_core.hpp"

namespace epibg {

struct EpaBaseline {
  /// Shared transmit power; must be a grid level. nullopt means p_max.
  std::optional<double> level;
};

struct SncpcBaseline {
  int max_iter = 1000;
};

using BaselineKind = std::variant<EpaBaseline, SncpcBaseline>;

/// Every node transmits at `level`. Throws std::invalid_argument when the
/// level is not on the grid.
PowerProfile epa_profile(const NetworkState& network, const PowerGrid& grid,
                         double level);

/// What a node knows when responding to mean-field interference: its own
/// gain and threshold, the prior, the noise power and the opponents' powers.
struct MeanFieldView {
  double own_gain = 0.0;
  double own_threshold = 1.0;
  double noise_power = 1.0;
  double lambda = 1.0;
};

/// Minimal grid power with |g_i|^2 p / (E[Y] + noise) >= threshold, where
/// E[Y] = sum(opponent_powers) / lambda. p_max and feasible == false if none.
BestResponse mean_field_response(const MeanFieldView& view,
                                 std::span<const double> opponent_powers,
                                 const PowerGrid& grid);

struct SncpcResult {
  PowerProfile profile;
  std::vector<bool> feasible;
  int iterations = 0;
  bool converged = false;
};

/// Synchronous mean-field best-response iteration from the lowest grid level.
/// Non-convergence returns the last profile with converged == false.
SncpcResult sncpc_solve(const NetworkState& network, const PowerGrid& grid,
                        const RayleighPrior& prior, int max_iter);

}  // namespace epibg
