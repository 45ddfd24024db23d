#include "epibg/baselines.hpp"

#include <stdexcept>

namespace epibg {

PowerProfile epa_profile(const NetworkState& network, const PowerGrid& grid,
                         double level) {
  const auto idx = grid.index_of(level);
  if (!idx) throw std::invalid_argument("EPA level is not a grid level");
  return PowerProfile{std::vector<double>(network.size(), grid.level(*idx))};
}

BestResponse mean_field_response(const MeanFieldView& view,
                                 std::span<const double> opponent_powers,
                                 const PowerGrid& grid) {
  BestResponse out{grid.p_max(), grid.size() - 1, false};
  if (view.own_gain <= 0.0) return out;
  double total = 0.0;
  for (double p : opponent_powers) total += p;
  const double mean_interference = total / view.lambda;
  const double g2 = view.own_gain * view.own_gain;
  const double denom = mean_interference + view.noise_power;
  auto meets = [&](std::size_t level) {
    return g2 * grid.level(level) / denom >= view.own_threshold;
  };
  auto level = grid.ceil_index(view.own_threshold * denom / g2);
  if (!level) return out;
  std::size_t idx = *level;
  while (idx > 0 && meets(idx - 1)) --idx;
  while (idx < grid.size() && !meets(idx)) ++idx;
  if (idx == grid.size()) return out;
  return {grid.level(idx), idx, true};
}

SncpcResult sncpc_solve(const NetworkState& network, const PowerGrid& grid,
                        const RayleighPrior& prior, int max_iter) {
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  const std::size_t n = network.size();
  SncpcResult result;
  result.profile.powers.assign(n, grid.p_min());
  result.feasible.assign(n, false);
  std::vector<double> opponents;
  opponents.reserve(n);

  for (int iter = 1; iter <= max_iter; ++iter) {
    std::vector<double> next(n);
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      opponents.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) opponents.push_back(result.profile.powers[j]);
      }
      const MeanFieldView view{network.node(i).gain, network.node(i).sinr_threshold,
                               network.noise_power(), prior.lambda()};
      const BestResponse br = mean_field_response(view, opponents, grid);
      next[i] = br.power;
      result.feasible[i] = br.feasible;
      changed = changed || next[i] != result.profile.powers[i];
    }
    result.profile.powers = std::move(next);
    result.iterations = iter;
    if (!changed) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace epibg
