#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "epibg/sim_harness.hpp"
#include "epibg/testing/oracle_suites.hpp"

using namespace epibg;

namespace {

ScenarioSpec small_spec() {
  ScenarioSpec spec;
  spec.n_nodes = 12;
  spec.trials = 60;
  spec.grid = PowerGrid::linear(1.0, 201);
  spec.noise_power = 1e-4;
  spec.seed = 99;
  return spec;
}

bool same_metrics(const ScenarioMetrics& a, const ScenarioMetrics& b) {
  return a.coverage == b.coverage && a.outage == b.outage && a.avg_power == b.avg_power &&
         a.coverage_ci == b.coverage_ci && a.power_ci == b.power_ci &&
         a.nonconverged == b.nonconverged && a.warning == b.warning;
}

}  // namespace

TEST_CASE("dB conversions") {
  CHECK(db_to_linear(-20.0) == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(db_to_linear(-120.0) == doctest::Approx(1e-12).epsilon(1e-12));
  CHECK(linear_to_db(1000.0) == doctest::Approx(30.0));
}

TEST_CASE("solver names round-trip") {
  for (const char* name : {"M1", "M2", "M3", "M4", "EPA", "SNCPC", "NASH"}) {
    CHECK(solver_name(parse_solver(name)) == name);
  }
  CHECK_THROWS_AS(parse_solver("M5"), std::invalid_argument);
}

TEST_CASE("scenario validation and interferer count") {
  ScenarioSpec spec;
  CHECK(spec.interferer_count() == 99);
  spec.interference_fraction = 0.25;
  CHECK(spec.interferer_count() == 25);
  spec.interference_fraction = 0.251;
  CHECK(spec.interferer_count() == 26);
  spec.interference_fraction = 0.0;
  CHECK(spec.interferer_count() == 0);
  spec.interference_fraction = 1.5;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  ScenarioSpec bad;
  bad.trials = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  ScenarioSpec th;
  th.n_nodes = 3;
  th.node_thresholds = {0.1, 0.2};
  CHECK_THROWS_AS(th.validate(), std::invalid_argument);
  th.node_thresholds = {0.1, 0.2, 0.3};
  CHECK(th.threshold_of(2) == 0.3);
}

TEST_CASE("trial draws are reproducible and shared across sweep points") {
  ScenarioSpec spec = small_spec();
  const auto a = draw_trial(spec, 5);
  const auto b = draw_trial(spec, 5);
  CHECK(a.gains == b.gains);
  spec.interference_fraction = 0.5;
  const auto c = draw_trial(spec, 5);
  REQUIRE(c.gains.size() < a.gains.size());
  for (std::size_t i = 0; i < c.gains.size(); ++i) CHECK(c.gains[i] == a.gains[i]);
  spec.tagged_gain = 0.5;
  const auto d = draw_trial(spec, 5);
  CHECK(d.gains[0] == 0.5);
  CHECK(d.gains[1] == a.gains[1]);
  CHECK(draw_trial(spec, 6).gains[1] != a.gains[1]);
}

TEST_CASE("single deterministic node") {
  ScenarioSpec spec;
  spec.n_nodes = 1;
  spec.trials = 5;
  spec.tagged_gain = 1.0;
  spec.threshold = 1.0;
  spec.noise_power = 1.0;
  spec.grid = PowerGrid::linear(2.0, 2001);
  const auto m = run_scenario(spec);
  CHECK(m.avg_power == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(m.coverage == 1.0);
}

TEST_CASE("vanishing threshold gives full coverage") {
  ScenarioSpec spec = small_spec();
  spec.threshold = 1e-9;
  for (const char* name : {"M1", "M4", "EPA", "SNCPC"}) {
    spec.solver = parse_solver(name);
    CHECK(run_scenario(spec).coverage == 1.0);
  }
}

TEST_CASE("two nodes, coarse grid: metrics equal a brute-force replay on the same draws") {
  ScenarioSpec spec;
  spec.n_nodes = 2;
  spec.trials = 200;
  spec.grid = PowerGrid::linear(1.0, 6);
  spec.noise_power = 0.05;
  spec.threshold = 0.3;
  spec.seed = 4242;
  const auto m = run_scenario(spec);

  std::vector<double> coverage;
  std::vector<double> power;
  for (int t = 0; t < spec.trials; ++t) {
    const auto net = trial_network(spec, draw_trial(spec, static_cast<std::uint64_t>(t)));
    const auto replay =
        epibg::testing::exhaustive_replay(net, spec.grid, 1.0, EpistemicPolicy{1, 4}, 1000);
    double cov = 0.0;
    double pw = 0.0;
    for (std::size_t i = 0; i < net.size(); ++i) {
      double interference = 0.0;
      for (std::size_t j = 0; j < net.size(); ++j) {
        if (j != i) interference += net.node(j).gain * net.node(j).gain * replay.final_profile.powers[j];
      }
      const double s = net.node(i).gain * net.node(i).gain * replay.final_profile.powers[i] /
                       (interference + spec.noise_power);
      cov += s >= spec.threshold ? 1.0 : 0.0;
      pw += replay.final_profile.powers[i];
    }
    coverage.push_back(cov / 2.0);
    power.push_back(pw / 2.0);
  }
  double cov_mean = 0.0;
  double pw_mean = 0.0;
  for (int t = 0; t < spec.trials; ++t) {
    cov_mean += coverage[static_cast<std::size_t>(t)];
    pw_mean += power[static_cast<std::size_t>(t)];
  }
  cov_mean /= spec.trials;
  pw_mean /= spec.trials;
  CHECK(m.coverage == doctest::Approx(cov_mean).epsilon(1e-12));
  CHECK(m.avg_power == doctest::Approx(pw_mean).epsilon(1e-12));
  CHECK(m.outage == 1.0 - m.coverage);
}

TEST_CASE("metrics do not depend on the worker count") {
  ScenarioSpec spec = small_spec();
  spec.solver = EpistemicPolicy{2, 4};
  const auto one = run_scenario(spec);
  spec.workers = 8;
  const auto eight = run_scenario(spec);
  CHECK(same_metrics(one, eight));
  spec.workers = 3;
  CHECK(same_metrics(one, run_scenario(spec)));
}

TEST_CASE("quadrupling trials halves the CI half-width within 20%") {
  ScenarioSpec spec = small_spec();
  spec.solver = EpaBaseline{};
  spec.trials = 400;
  const auto a = run_scenario(spec);
  spec.trials = 1600;
  const auto b = run_scenario(spec);
  REQUIRE(a.coverage_ci > 0.0);
  const double ratio = b.coverage_ci / a.coverage_ci;
  CHECK(ratio == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("coverage is monotone in threshold and tagged gain within CI") {
  ScenarioSpec spec = small_spec();
  spec.trials = 200;
  spec.interference_fraction = 1.0;
  std::vector<double> gains{0.25, 0.5, 1.0, 2.0};
  std::vector<double> thresholds{-30.0, -20.0, -10.0, -5.0};
  const auto rows = sweep_fig4(spec, gains, thresholds);
  REQUIRE(rows.size() == 16);
  auto at = [&](std::size_t ti, std::size_t gi) { return rows[ti * gains.size() + gi]; };
  for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
    for (std::size_t gi = 0; gi < gains.size(); ++gi) {
      const auto r = at(ti, gi);
      CHECK(r.gain == gains[gi]);
      CHECK(r.threshold_db == thresholds[ti]);
      if (gi + 1 < gains.size()) {
        const auto next = at(ti, gi + 1);
        CHECK(next.metric >= r.metric - (r.ci + next.ci) - 1e-12);
      }
      if (ti + 1 < thresholds.size()) {
        const auto next = at(ti + 1, gi);
        CHECK(next.metric <= r.metric + (r.ci + next.ci) + 1e-12);
      }
    }
  }
}

TEST_CASE("sweep shapes and metric selection") {
  ScenarioSpec spec = small_spec();
  spec.trials = 10;
  const auto f3 = sweep_fig3(spec, {0.5}, {-20.0});
  REQUIRE(f3.size() == 1);
  CHECK(f3[0].metric == f3[0].metrics.avg_power);
  CHECK(f3[0].ci == f3[0].metrics.power_ci);
  const std::vector<SolverChoice> pols{EpistemicPolicy{1, 4}, EpaBaseline{}};
  const auto f5 = sweep_fig5(spec, {0.2, 0.6}, pols);
  REQUIRE(f5.size() == 4);
  CHECK(f5[0].interference_pct == doctest::Approx(20.0));
  CHECK(f5[1].policy == "EPA");
  CHECK(f5[0].metric == f5[0].metrics.outage);
  const auto f6 = sweep_fig6(spec, {0.2, 0.6}, pols);
  CHECK(f6[1].metric == 1.0);
  CHECK(f6[3].metric == 1.0);
  CHECK_THROWS_AS(sweep_fig3(spec, {}, {-20.0}), std::invalid_argument);
  CHECK_THROWS_AS(sweep_fig5(spec, {0.5}, {}), std::invalid_argument);
}

TEST_CASE("iteration budget exhaustion raises the warning flag") {
  ScenarioSpec spec = small_spec();
  spec.trials = 20;
  spec.max_iterations = 1;
  const auto m = run_scenario(spec);
  CHECK(m.nonconverged > 0);
  CHECK(m.warning);
}

TEST_CASE("full-CSI Nash as a harness solver") {
  ScenarioSpec spec = small_spec();
  spec.n_nodes = 4;
  spec.trials = 30;
  spec.solver = FullCsiNash{};
  const auto m = run_scenario(spec);
  CHECK(m.nonconverged == 0);
  CHECK(m.coverage > 0.0);
}
