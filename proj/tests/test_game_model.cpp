#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "epibg/game_model.hpp"
#include "epibg/testing/oracle_suites.hpp"

using namespace epibg;

namespace {

NetworkState fig2_network() {
  return NetworkState({{0, 0.2, 0.8}, {1, 0.1, 0.4}}, 1.0);
}

// Threshold equations g_i^2 p_i = t_i (g_j^2 p_j + 1) solved in closed form.
std::pair<double, double> fig2_closed_form() {
  const double a = 0.04;
  const double b = 0.01;
  const double ti = 0.8;
  const double tj = 0.4;
  // a p_i - ti b p_j = ti; -tj a p_i + b p_j = tj
  const double det = a * b - ti * b * tj * a;
  const double pi = (ti * b + ti * b * tj) / det;
  const double pj = (a * tj + tj * a * ti) / det;
  return {pi, pj};
}

NetworkState random_network(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.05, 2.0);
  std::uniform_real_distribution<double> t(0.05, 1.5);
  std::vector<NodeConfig> nodes;
  for (int i = 0; i < n; ++i) nodes.push_back({i, u(rng), t(rng)});
  return NetworkState(std::move(nodes), 0.1);
}

}  // namespace

TEST_CASE("node and grid validation") {
  CHECK(NodeConfig{0, 1.0, 3.0}.throughput_threshold() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(PowerGrid({}), std::invalid_argument);
  CHECK_THROWS_AS(PowerGrid({0.0, 0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(PowerGrid({-0.1, 0.5}), std::invalid_argument);
  const auto g = PowerGrid::linear(2.0, 5);
  CHECK(g.size() == 5);
  CHECK(g.p_max() == 2.0);
  CHECK(g.level(1) == 0.5);
  CHECK(g.index_of(1.5) == std::optional<std::size_t>(3));
  CHECK_FALSE(g.contains(1.4));
  CHECK(g.ceil_index(1.4) == std::optional<std::size_t>(3));
  CHECK_FALSE(g.ceil_index(2.1).has_value());
  CHECK_THROWS_AS(NetworkState({}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(NetworkState({{0, 1, 1}, {0, 1, 1}}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(NetworkState({{0, 1, 1}}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(NetworkState({{0, -1, 1}}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(NetworkState({{0, 1, 0}}, 1.0), std::invalid_argument);
}

TEST_CASE("sinr examples") {
  const NetworkState one({{0, 1.0, 1.0}}, 1.0);
  CHECK(sinr(one, {{1.0}}, 0) == doctest::Approx(1.0));
  CHECK(sinr(one, {{0.0}}, 0) == 0.0);
  CHECK_THROWS_AS(sinr(one, {{1.0}}, 5), std::out_of_range);

  const NetworkState two = fig2_network();
  const PowerProfile p{{41.18, 105.9}};
  CHECK(sinr(two, p, 0) == doctest::Approx(0.8).epsilon(1e-3));
  CHECK(sinr(two, p, 1) == doctest::Approx(0.4).epsilon(1e-3));
}

TEST_CASE("throughput examples") {
  const NetworkState one({{0, 1.0, 1.0}}, 1.0);
  CHECK(throughput(one, {{1.0}}, 0) == doctest::Approx(1.0));
  CHECK(throughput(one, {{0.0}}, 0) == 0.0);
  const NetworkState wide({{0, 1.0, 1.0}}, 1.0, 2.0);
  CHECK(throughput(wide, {{3.0}}, 0) == doctest::Approx(4.0));
}

TEST_CASE("sinr homogeneity under joint scaling of powers and noise") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int t = 0; t < 100; ++t) {
    auto net = random_network(rng, 4);
    std::vector<NodeConfig> nodes(net.nodes().begin(), net.nodes().end());
    const double c = u(rng);
    const NetworkState scaled(nodes, net.noise_power() * c);
    std::vector<double> p(4);
    for (double& x : p) x = u(rng);
    std::vector<double> pc = p;
    for (double& x : pc) x *= c;
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(sinr_at(scaled, pc, i) == doctest::Approx(sinr_at(net, p, i)).epsilon(1e-12));
    }
  }
}

TEST_CASE("best response examples") {
  const NetworkState one({{0, 1.0, 0.5}}, 1.0);
  const PowerGrid grid({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
  const auto br = best_response_full_csi(one, {{0.1}}, 0, grid);
  CHECK(br.power == doctest::Approx(0.5));
  CHECK(br.feasible);

  const NetworkState hard({{0, 1.0, 5.0}}, 1.0);
  const auto none = best_response_full_csi(hard, {{0.1}}, 0, grid);
  CHECK(none.power == 1.0);
  CHECK_FALSE(none.feasible);

  const auto [pi, pj] = fig2_closed_form();
  const PowerGrid fine = PowerGrid::linear(200.0, 20001);
  const auto bri = best_response_full_csi(fig2_network(), {{0.0, pj}}, 0, fine);
  CHECK(std::abs(bri.power - pi) <= 0.01);
}

TEST_CASE("best response is monotone in threshold and gain") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  const PowerGrid grid = PowerGrid::linear(5.0, 101);
  for (int t = 0; t < 300; ++t) {
    const double g = u(rng);
    const double th = u(rng);
    const double other = u(rng);
    const PowerProfile prof{{1.0, 2.0}};
    auto power = [&](double gain, double thr) {
      const NetworkState net({{0, gain, thr}, {1, other, 1.0}}, 0.2);
      return best_response_full_csi(net, prof, 0, grid).power;
    };
    CHECK(power(g, th) <= power(g, th * 1.3));
    CHECK(power(g * 1.3, th) <= power(g, th));
  }
}

TEST_CASE("Nash solver reproduces the two-node equilibrium") {
  const auto [pi, pj] = fig2_closed_form();
  CHECK(pi == doctest::Approx(41.18).epsilon(1e-3));
  CHECK(pj == doctest::Approx(105.88).epsilon(1e-3));
  const PowerGrid fine = PowerGrid::linear(200.0, 20001);
  const auto sol = solve_nash_full_csi(fig2_network(), fine, 10000, 0.0);
  CHECK(std::abs(sol.profile.powers[0] - pi) <= 0.01 + 1e-9);
  CHECK(std::abs(sol.profile.powers[1] - pj) <= 0.01 + 1e-9);
  CHECK(sol.feasible[0]);
  CHECK(sol.feasible[1]);
  CHECK(verify_epsilon_nash(fig2_network(), fine, sol.profile, 0.0).ok);
}

TEST_CASE("Nash solver: symmetric pair and single node") {
  const PowerGrid grid = PowerGrid::linear(10.0, 1001);
  const NetworkState sym({{0, 0.7, 0.5}, {1, 0.7, 0.5}}, 0.3);
  const auto s = solve_nash_full_csi(sym, grid, 1000, 0.0);
  CHECK(s.profile.powers[0] == s.profile.powers[1]);

  const NetworkState one({{4, 0.9, 2.0}}, 0.5);
  const auto single = solve_nash_full_csi(one, grid, 10, 0.0);
  CHECK(single.profile.powers[0] == best_response_full_csi(one, {{0.0}}, 4, grid).power);
}

TEST_CASE("Nash solver reports non-convergence with a trace") {
  const NetworkState net = fig2_network();
  const PowerGrid fine = PowerGrid::linear(200.0, 20001);
  try {
    solve_nash_full_csi(net, fine, 3, 0.0);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK_FALSE(e.trace().empty());
  }
}

TEST_CASE("infeasible nodes stay at p_max and the profile is still epsilon-Nash") {
  const PowerGrid grid = PowerGrid::linear(1.0, 11);
  const NetworkState net({{0, 1.0, 0.5}, {1, 0.1, 50.0}}, 0.1);
  const auto sol = solve_nash_full_csi(net, grid, 100, 0.0);
  CHECK(sol.profile.powers[1] == 1.0);
  CHECK_FALSE(sol.feasible[1]);
  CHECK(verify_epsilon_nash(net, grid, sol.profile, 0.0).ok);
}

TEST_CASE("deviation scan detects a non-equilibrium") {
  const PowerGrid grid = PowerGrid::linear(1.0, 11);
  const NetworkState net({{0, 1.0, 0.5}}, 0.1);
  const auto check = verify_epsilon_nash(net, grid, {{1.0}}, 0.0);
  CHECK_FALSE(check.ok);
  CHECK(check.violating_node == std::optional<int>(0));
  CHECK(check.better_power == doctest::Approx(0.1));
  CHECK(verify_epsilon_nash(net, grid, {{1.0}}, 0.95).ok);
}

TEST_CASE("epsilon-Nash on random small networks") {
  const auto r = epibg::testing::epsilon_nash_suite(300, 41);
  INFO(r.detail);
  CHECK(r.passed);
}

TEST_CASE("halving the grid step never raises total power by more than a step per node") {
  std::mt19937_64 rng(43);
  int compared = 0;
  for (int t = 0; t < 200; ++t) {
    const auto net = random_network(rng, 3);
    const PowerGrid coarse = PowerGrid::linear(4.0, 41);
    const PowerGrid fine = PowerGrid::linear(4.0, 81);
    NashSolution a;
    NashSolution b;
    try {
      a = solve_nash_full_csi(net, coarse, 1000, 0.0);
      b = solve_nash_full_csi(net, fine, 1000, 0.0);
    } catch (const ConvergenceError&) {
      continue;
    }
    bool all_feasible = true;
    for (bool f : a.feasible) all_feasible = all_feasible && f;
    for (bool f : b.feasible) all_feasible = all_feasible && f;
    if (!all_feasible) continue;
    ++compared;
    double ta = 0.0;
    double tb = 0.0;
    for (double p : a.profile.powers) ta += p;
    for (double p : b.profile.powers) tb += p;
    CHECK(tb <= ta + 3 * 0.1 + 1e-12);
  }
  CHECK(compared > 20);
}
