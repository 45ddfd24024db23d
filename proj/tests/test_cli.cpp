#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "epibg/cli/commands.hpp"
#include "epibg/cli/config.hpp"

using namespace epibg::cli;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result invoke(const std::vector<std::string>& args,
              const std::optional<std::string>& env_seed = std::nullopt) {
  std::ostringstream out;
  std::ostringstream err;
  Result r;
  r.code = run(args, out, err, env_seed);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string config_path(const std::string& name) {
  return std::string(EPIBG_CONFIG_DIR) + "/" + name;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::vector<std::string> data_rows(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& l : lines(text)) {
    if (!l.empty() && l[0] != '#') out.push_back(l);
  }
  return out;
}

std::vector<std::string> fields(const std::string& row) {
  std::vector<std::string> out;
  std::istringstream in(row);
  std::string f;
  while (std::getline(in, f, ',')) out.push_back(f);
  return out;
}

std::map<std::string, double> fit_table(const std::string& text) {
  std::map<std::string, double> out;
  for (const auto& row : data_rows(text)) {
    const auto f = fields(row);
    if (f[0] != "quantity") out[f[0]] = std::stod(f[1]);
  }
  return out;
}

const std::vector<std::string> kSmall{"--set", "scenario.nodes=8", "--set", "scenario.trials=20"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

}  // namespace

TEST_CASE("fit-gamma examples") {
  const auto erlang = invoke({"fit-gamma", "--powers", "1,1,1", "--lambda", "0.5"});
  REQUIRE(erlang.code == kExitOk);
  const auto t = fit_table(erlang.out);
  CHECK(t.at("alpha_hat") == doctest::Approx(3.0));
  CHECK(t.at("theta_hat") == doctest::Approx(2.0));
  CHECK(t.at("raw_moment_1") == doctest::Approx(6.0));
  CHECK(t.at("central_moment_2") == doctest::Approx(12.0));

  const auto pair = invoke({"fit-gamma", "--powers", "1,3", "--lambda", "1"});
  REQUIRE(pair.code == kExitOk);
  const auto u = fit_table(pair.out);
  CHECK(u.at("alpha_hat") == doctest::Approx(1.6));
  CHECK(u.at("theta_hat") == doctest::Approx(2.5));
}

TEST_CASE("fit-gamma errors exit 2") {
  const auto empty = invoke({"fit-gamma", "--powers", "", "--lambda", "1"});
  CHECK(empty.code == kExitUsage);
  CHECK(empty.err.find("no interferers") != std::string::npos);
  CHECK(invoke({"fit-gamma", "--lambda", "1"}).code == kExitUsage);
  CHECK(invoke({"fit-gamma", "--powers", "1,x", "--lambda", "1"}).code == kExitUsage);
  CHECK(invoke({"fit-gamma", "--powers", "1", "--lambda", "0"}).code == kExitUsage);
  CHECK(invoke({"fit-gamma", "--powers", "1"}).code == kExitUsage);
  CHECK(invoke({}).code == kExitUsage);
  CHECK(invoke({"bogus"}).code == kExitUsage);
}

TEST_CASE("config parsing") {
  const auto cfg = RunConfig::parse("[scenario]\nnodes = 7 # comment\nthreshold_linear=0.5\n");
  const auto spec = cfg.scenario(3);
  CHECK(spec.n_nodes == 7);
  CHECK(spec.threshold == 0.5);
  CHECK(spec.seed == 3);
  CHECK_THROWS_AS(RunConfig::parse("[scenario]\nthreshold = 1\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("nodes = 1\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("[scenario]\nnodes = 1\nnodes = 2\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("[scenario]\nthreshold_db = 1\nthreshold_linear = 2\n"),
                  ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("[scenario\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("[scenario]\nnodes = two\n").scenario(1), ConfigError);
  RunConfig over = cfg;
  over.set("scenario.threshold_db=-10");
  CHECK(over.scenario(1).threshold == doctest::Approx(0.1));
  CHECK_THROWS_AS(over.set("scenario-nodes"), ConfigError);
}

TEST_CASE("unknown or unsuffixed keys exit 2 naming the key") {
  const auto r = invoke({"solve", "epa", "--set", "scenario.threshold=0.1"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("scenario.threshold") != std::string::npos);

  const auto path = std::filesystem::temp_directory_path() / "epibg_bad.conf";
  {
    std::ofstream os(path);
    os << "[scenario]\nnodes = 3\nnoise_power = 1\n";
  }
  const auto f = invoke({"solve", "epa", "--config", path.string()});
  CHECK(f.code == kExitUsage);
  CHECK(f.err.find("scenario.noise_power") != std::string::npos);
  std::filesystem::remove(path);

  CHECK(invoke({"solve", "epa", "--config", "/nonexistent/x.conf"}).code == kExitUsage);
  CHECK(invoke({"solve", "epistemic", "--moment", "5"}).code == kExitUsage);
}

TEST_CASE("solve nash on the two-node config reproduces the closed-form pair") {
  const auto r = invoke({"solve", "nash", "--config", config_path("two_node.conf")});
  REQUIRE(r.code == kExitOk);
  const auto rows = data_rows(r.out);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "id,gain,power,statistic,feasible");
  const auto a = fields(rows[1]);
  const auto b = fields(rows[2]);
  CHECK(std::stod(a[2]) == doctest::Approx(41.18).epsilon(2e-4));
  CHECK(std::stod(b[2]) == doctest::Approx(105.88).epsilon(2e-4));
  CHECK(a[4] == "1");
  CHECK(b[4] == "1");
}

TEST_CASE("solve epistemic on a single node gives one deterministic row") {
  const std::vector<std::string> args{"solve",       "epistemic", "--moment",
                                      "1",           "--set",     "network.gains_linear=1",
                                      "--set",       "scenario.noise_power_linear=1",
                                      "--set",       "scenario.threshold_linear=0.5",
                                      "--set",       "scenario.p_max_linear=2",
                                      "--set",       "scenario.grid_levels=2001"};
  const auto r = invoke(args);
  REQUIRE(r.code == kExitOk);
  const auto rows = data_rows(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "id,gain,power,statistic,feasible,eu_evaluations");
  const auto f = fields(rows[1]);
  CHECK(std::stod(f[2]) == doctest::Approx(0.5));
  CHECK(f[4] == "1");
  CHECK(invoke(args).out == r.out);
}

TEST_CASE("solve writes stage traces and output files") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto out = dir / "epibg_solve.csv";
  const auto trace = dir / "epibg_trace.csv";
  const auto r = invoke(with({"solve", "epistemic", "--out", out.string(), "--trace",
                              trace.string()},
                             kSmall));
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.empty());
  std::ifstream in(trace);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("l,m,role,observer,target", 0) == 0);
  std::ifstream csv(out);
  std::stringstream buf;
  buf << csv.rdbuf();
  CHECK(data_rows(buf.str()).size() == 9);
  std::filesystem::remove(out);
  std::filesystem::remove(trace);
}

TEST_CASE("solve sncpc and epa") {
  const auto s = invoke(with({"solve", "sncpc"}, kSmall));
  CHECK(s.code == kExitOk);
  CHECK(data_rows(s.out).size() == 9);
  const auto e = invoke(with({"solve", "epa", "--set", "scenario.epa_level_linear=0.5"}, kSmall));
  REQUIRE(e.code == kExitOk);
  for (std::size_t i = 1; i < data_rows(e.out).size(); ++i) {
    CHECK(fields(data_rows(e.out)[i])[2] == "0.5");
  }
  CHECK(invoke(with({"solve", "epa", "--set", "scenario.epa_level_linear=0.5005"}, kSmall))
            .code == kExitUsage);
}

TEST_CASE("non-convergence exits 1") {
  const auto r = invoke({"solve", "nash", "--config", config_path("two_node.conf"), "--set",
                         "scenario.max_iterations=2"});
  CHECK(r.code == kExitNonConvergence);
  const auto f = invoke(with({"figure", "5", "--set", "scenario.max_iterations=1", "--set",
                              "figure5.interference_pct=90", "--set", "figure5.policies=M1"},
                             kSmall));
  CHECK(f.code == kExitNonConvergence);
  CHECK(f.out.find("# warning:") != std::string::npos);
}

TEST_CASE("figure 3 with one gain gives one row") {
  const auto r = invoke(with({"figure", "3", "--set", "figure3.gains_linear=0.5", "--set",
                              "figure3.thresholds_db=-20"},
                             kSmall));
  REQUIRE(r.code == kExitOk);
  const auto rows = data_rows(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "gain,threshold_db,metric,ci");
  CHECK(fields(rows[1])[0] == "0.5");
}

TEST_CASE("figure 6 EPA column is constant") {
  const auto r = invoke(with({"figure", "6", "--set", "figure6.policies=EPA,M1"}, kSmall));
  REQUIRE(r.code == kExitOk);
  const auto rows = data_rows(r.out);
  REQUIRE(rows.size() == 19);
  CHECK(rows[0] == "interference_pct,policy,metric,ci");
  int epa = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = fields(rows[i]);
    if (f[1] == "EPA") {
      CHECK(f[2] == "1");
      ++epa;
    }
  }
  CHECK(epa == 9);
}

TEST_CASE("figure 5 M1 outage trend at reduced scale") {
  const auto r = invoke(with({"figure", "5", "--set", "figure5.policies=M1", "--set",
                              "scenario.trials=100", "--set", "scenario.nodes=20"},
                             {}));
  REQUIRE(r.code == kExitOk);
  const auto rows = data_rows(r.out);
  REQUIRE(rows.size() == 10);
  double prev = -1.0;
  int drops = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = fields(rows[i]);
    const double v = std::stod(f[2]);
    const double ci = std::stod(f[3]);
    if (v + ci < prev) ++drops;
    prev = v;
  }
  // Monotonicity of the full-scale sweep is an acceptance question; here
  // the count is reported.
  MESSAGE("M1 outage drops beyond CI at N=20: " << drops);
}

TEST_CASE("seed precedence and reproducibility stamp") {
  const std::vector<std::string> base = with({"solve", "epa"}, kSmall);
  const auto plain = invoke(base);
  CHECK(plain.out.rfind("# epibg solve epa\n# config: seed=1; ", 0) == 0);
  CHECK(plain.out.find("scenario.nodes=8") != std::string::npos);
  CHECK(plain.out.find("scenario.workers") == std::string::npos);
  const auto env = invoke(base, std::string("77"));
  CHECK(env.out.find("seed=77;") != std::string::npos);
  CHECK(env.out != plain.out);
  const auto both = invoke(with(base, {"--set", "scenario.seed=5"}), std::string("77"));
  CHECK(both.out.find("seed=5;") != std::string::npos);
  const auto same = invoke(with(base, {"--set", "scenario.seed=5"}));
  CHECK(same.out == both.out);
  CHECK(invoke(base, std::string("abc")).code == kExitUsage);
}

TEST_CASE("figure output is byte-identical across runs and worker counts") {
  const std::vector<std::string> args =
      with({"figure", "5", "--set", "figure5.interference_pct=30,70"}, kSmall);
  const auto a = invoke(args);
  const auto b = invoke(args);
  const auto c = invoke(with(args, {"--set", "scenario.workers=8"}));
  REQUIRE(a.code == kExitOk);
  CHECK(a.out == b.out);
  CHECK(a.out == c.out);
}

TEST_CASE("shipped default config matches built-in defaults") {
  const auto file = RunConfig::load(config_path("defaults.conf"));
  RunConfig builtin;
  builtin.set("scenario.seed=1");
  CHECK(file.resolved_entries() == builtin.resolved_entries());
}
