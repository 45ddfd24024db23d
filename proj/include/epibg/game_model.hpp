#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace epibg {

struct NodeConfig {
  int id = 0;
  double gain = 0.0;            // |g_i|
  double sinr_threshold = 1.0;  // linear

  /// C_i^th = B log2(1 + gamma_i^th).
  double throughput_threshold(double bandwidth = 1.0) const;
};

/// Finite, strictly increasing set of transmit powers. p_max is the last level.
class PowerGrid {
 public:
  explicit PowerGrid(std::vector<double> levels);
  /// `count` levels evenly spaced on [0, p_max].
  static PowerGrid linear(double p_max, std::size_t count);

  std::span<const double> levels() const { return levels_; }
  std::size_t size() const { return levels_.size(); }
  double level(std::size_t index) const { return levels_[index]; }
  double p_max() const { return levels_.back(); }
  double p_min() const { return levels_.front(); }

  /// Index of the level equal to `power` (within 1e-12 p_max), if any.
  std::optional<std::size_t> index_of(double power) const;
  bool contains(double power) const { return index_of(power).has_value(); }
  /// Smallest index whose level is >= value; nullopt above p_max.
  std::optional<std::size_t> ceil_index(double value) const;

 private:
  std::vector<double> levels_;
};

class NetworkState {
 public:
  NetworkState(std::vector<NodeConfig> nodes, double noise_power,
               double bandwidth = 1.0);

  std::span<const NodeConfig> nodes() const { return nodes_; }
  const NodeConfig& node(std::size_t index) const { return nodes_[index]; }
  std::size_t size() const { return nodes_.size(); }
  double noise_power() const { return noise_power_; }
  double bandwidth() const { return bandwidth_; }

  /// Position of node `id`; throws std::out_of_range for unknown ids.
  std::size_t index_of(int id) const;

 private:
  std::vector<NodeConfig> nodes_;
  double noise_power_;
  double bandwidth_;
};

/// Joint power choice, aligned with NetworkState::nodes() order.
struct PowerProfile {
  std::vector<double> powers;

  double at(const NetworkState& network, int id) const {
    return powers.at(network.index_of(id));
  }
};

/// Throws std::invalid_argument unless `profile` has one grid power per node.
void validate_profile(const NetworkState& network, const PowerGrid& grid,
                      const PowerProfile& profile);

double sinr(const NetworkState& network, const PowerProfile& profile, int id);
double throughput(const NetworkState& network, const PowerProfile& profile,
                  int id);

/// SINR of the node at `index` given a power vector aligned with the network.
double sinr_at(const NetworkState& network, std::span<const double> powers,
               std::size_t index);

struct BestResponse {
  double power = 0.0;
  std::size_t level = 0;
  bool feasible = false;
};

/// Minimal grid power meeting node `id`'s SINR threshold against the fixed
/// opponents in `profile`; p_max with feasible == false when none does.
BestResponse best_response_full_csi(const NetworkState& network,
                                    const PowerProfile& profile, int id,
                                    const PowerGrid& grid);

struct NashOptions {
  /// Grid index every node starts from.
  std::size_t start_level = 0;
};

struct NashSolution {
  PowerProfile profile;
  std::vector<bool> feasible;
  int rounds = 0;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<PowerProfile> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<PowerProfile>& trace() const { return trace_; }

 private:
  std::vector<PowerProfile> trace_;
};

/// Synchronous best-response rounds (ascending id) until no node changes its
/// action. Throws ConvergenceError after max_rounds, and std::logic_error if
/// the fixed point fails the epsilon-Nash check.
NashSolution solve_nash_full_csi(const NetworkState& network,
                                 const PowerGrid& grid, int max_rounds,
                                 double epsilon, NashOptions options = {});

struct NashCheck {
  bool ok = true;
  std::optional<int> violating_node;
  double better_power = 0.0;
};

/// Exhaustive per-node deviation scan. Utility is lexicographic: meeting the
/// threshold first, then lower power. A deviation counts when it reaches a
/// feasible state from an infeasible one, or lowers a feasible power by more
/// than epsilon while staying feasible.
NashCheck verify_epsilon_nash(const NetworkState& network,
                              const PowerGrid& grid,
                              const PowerProfile& profile, double epsilon);

}  // namespace epibg
