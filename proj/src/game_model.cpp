#include "epibg/game_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace epibg {

double NodeConfig::throughput_threshold(double bandwidth) const {
  return bandwidth * std::log2(1.0 + sinr_threshold);
}

PowerGrid::PowerGrid(std::vector<double> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) throw std::invalid_argument("power grid is empty");
  if (!(levels_.front() >= 0.0)) {
    throw std::invalid_argument("power grid levels must be nonnegative");
  }
  for (std::size_t i = 1; i < levels_.size(); ++i) {
    if (!(levels_[i] > levels_[i - 1])) {
      throw std::invalid_argument("power grid must be strictly increasing");
    }
  }
  if (!(levels_.back() > 0.0) || !std::isfinite(levels_.back())) {
    throw std::invalid_argument("p_max must be positive and finite");
  }
}

PowerGrid PowerGrid::linear(double p_max, std::size_t count) {
  if (count == 0) throw std::invalid_argument("power grid needs >= 1 level");
  if (count == 1) return PowerGrid({p_max});
  std::vector<double> levels(count);
  for (std::size_t i = 0; i < count; ++i) {
    levels[i] = p_max * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  levels.back() = p_max;
  return PowerGrid(std::move(levels));
}

std::optional<std::size_t> PowerGrid::index_of(double power) const {
  const double tol = 1e-12 * p_max();
  auto it = std::lower_bound(levels_.begin(), levels_.end(), power - tol);
  if (it != levels_.end() && std::abs(*it - power) <= tol) {
    return static_cast<std::size_t>(it - levels_.begin());
  }
  return std::nullopt;
}

std::optional<std::size_t> PowerGrid::ceil_index(double value) const {
  auto it = std::lower_bound(levels_.begin(), levels_.end(), value);
  if (it == levels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - levels_.begin());
}

NetworkState::NetworkState(std::vector<NodeConfig> nodes, double noise_power,
                           double bandwidth)
    : nodes_(std::move(nodes)), noise_power_(noise_power), bandwidth_(bandwidth) {
  if (nodes_.empty()) throw std::invalid_argument("network needs at least one node");
  if (!(noise_power_ > 0.0)) throw std::invalid_argument("noise power must be > 0");
  if (!(bandwidth_ > 0.0)) throw std::invalid_argument("bandwidth must be > 0");
  std::set<int> ids;
  for (const auto& n : nodes_) {
    if (!ids.insert(n.id).second) {
      throw std::invalid_argument("duplicate node id " + std::to_string(n.id));
    }
    if (!(n.gain >= 0.0) || !std::isfinite(n.gain)) {
      throw std::invalid_argument("node gain must be >= 0");
    }
    if (!(n.sinr_threshold > 0.0)) {
      throw std::invalid_argument("SINR threshold must be > 0");
    }
  }
}

std::size_t NetworkState::index_of(int id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return i;
  }
  throw std::out_of_range("unknown node id " + std::to_string(id));
}

void validate_profile(const NetworkState& network, const PowerGrid& grid,
                      const PowerProfile& profile) {
  if (profile.powers.size() != network.size()) {
    throw std::invalid_argument("profile size does not match the network");
  }
  for (double p : profile.powers) {
    if (!grid.contains(p)) {
      throw std::invalid_argument("profile power is not a grid level");
    }
  }
}

double sinr_at(const NetworkState& network, std::span<const double> powers,
               std::size_t index) {
  double interference = 0.0;
  for (std::size_t j = 0; j < network.size(); ++j) {
    if (j == index) continue;
    const double g = network.node(j).gain;
    interference += g * g * powers[j];
  }
  const double g = network.node(index).gain;
  return g * g * powers[index] / (interference + network.noise_power());
}

double sinr(const NetworkState& network, const PowerProfile& profile, int id) {
  const std::size_t index = network.index_of(id);
  if (profile.powers.size() != network.size()) {
    throw std::invalid_argument("profile size does not match the network");
  }
  return sinr_at(network, profile.powers, index);
}

double throughput(const NetworkState& network, const PowerProfile& profile,
                  int id) {
  return network.bandwidth() * std::log2(1.0 + sinr(network, profile, id));
}

BestResponse best_response_full_csi(const NetworkState& network,
                                    const PowerProfile& profile, int id,
                                    const PowerGrid& grid) {
  const std::size_t index = network.index_of(id);
  const NodeConfig& node = network.node(index);
  BestResponse out{grid.p_max(), grid.size() - 1, false};
  if (node.gain <= 0.0) return out;

  std::vector<double> powers = profile.powers;
  auto meets = [&](std::size_t level) {
    powers[index] = grid.level(level);
    return sinr_at(network, powers, index) >= node.sinr_threshold;
  };

  powers[index] = 0.0;
  double interference = 0.0;
  for (std::size_t j = 0; j < network.size(); ++j) {
    if (j == index) continue;
    const double g = network.node(j).gain;
    interference += g * g * powers[j];
  }
  const double required = node.sinr_threshold *
                          (interference + network.noise_power()) /
                          (node.gain * node.gain);
  auto level = grid.ceil_index(required);
  if (!level) return out;
  // Correct for rounding in the closed-form inversion.
  std::size_t idx = *level;
  while (idx > 0 && meets(idx - 1)) --idx;
  while (idx < grid.size() && !meets(idx)) ++idx;
  if (idx == grid.size()) return out;
  return {grid.level(idx), idx, true};
}

NashSolution solve_nash_full_csi(const NetworkState& network,
                                 const PowerGrid& grid, int max_rounds,
                                 double epsilon, NashOptions options) {
  if (max_rounds < 1) throw std::invalid_argument("max_rounds must be >= 1");
  if (options.start_level >= grid.size()) {
    throw std::invalid_argument("start level outside the grid");
  }
  NashSolution sol;
  sol.profile.powers.assign(network.size(), grid.level(options.start_level));
  sol.feasible.assign(network.size(), false);
  std::vector<PowerProfile> history;

  for (int round = 1; round <= max_rounds; ++round) {
    PowerProfile next = sol.profile;
    bool changed = false;
    for (std::size_t i = 0; i < network.size(); ++i) {
      const BestResponse br =
          best_response_full_csi(network, sol.profile, network.node(i).id, grid);
      next.powers[i] = br.power;
      sol.feasible[i] = br.feasible;
      changed = changed || br.power != sol.profile.powers[i];
    }
    history.push_back(next);
    if (history.size() > 8) history.erase(history.begin());
    sol.profile = std::move(next);
    sol.rounds = round;
    if (!changed) {
      const NashCheck check = verify_epsilon_nash(network, grid, sol.profile, epsilon);
      if (!check.ok) {
        throw std::logic_error("best-response fixed point failed the epsilon-Nash check");
      }
      return sol;
    }
  }
  std::ostringstream msg;
  msg << "full-CSI best response did not converge within " << max_rounds
      << " rounds";
  throw ConvergenceError(msg.str(), std::move(history));
}

NashCheck verify_epsilon_nash(const NetworkState& network,
                              const PowerGrid& grid,
                              const PowerProfile& profile, double epsilon) {
  validate_profile(network, grid, profile);
  std::vector<double> powers = profile.powers;
  for (std::size_t i = 0; i < network.size(); ++i) {
    const NodeConfig& node = network.node(i);
    const double current = profile.powers[i];
    const bool current_ok = sinr_at(network, powers, i) >= node.sinr_threshold;
    for (double q : grid.levels()) {
      powers[i] = q;
      const bool ok = sinr_at(network, powers, i) >= node.sinr_threshold;
      const bool better = ok && (!current_ok || q < current - epsilon);
      if (better) {
        return {false, node.id, q};
      }
    }
    powers[i] = current;
  }
  return {};
}

}  // namespace epibg
