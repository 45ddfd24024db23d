#include "epibg/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace epibg::cli {

namespace {

struct KeySpec {
  const char* section;
  const char* key;
  const char* default_value;  // nullptr: unset unless given
};

// Every accepted key with its default. Physical quantities carry _db or
// _linear; alternative spellings of one quantity default to nullptr.
constexpr KeySpec kSchema[] = {
    {"scenario", "nodes", "100"},
    {"scenario", "trials", "10000"},
    {"scenario", "seed", nullptr},
    {"scenario", "workers", "1"},
    {"scenario", "max_iterations", "1000"},
    {"scenario", "rayleigh_sigma_linear", "1"},
    {"scenario", "noise_power_db", "-120"},
    {"scenario", "noise_power_linear", nullptr},
    {"scenario", "threshold_db", "-20"},
    {"scenario", "threshold_linear", nullptr},
    {"scenario", "p_max_linear", "1"},
    {"scenario", "grid_levels", "1001"},
    {"scenario", "interference_pct", "100"},
    {"scenario", "tagged_gain_linear", nullptr},
    {"scenario", "policy", "M1"},
    {"scenario", "truncation", "4"},
    {"scenario", "epa_level_linear", nullptr},
    {"scenario", "nash_epsilon_linear", "0"},
    {"network", "gains_linear", nullptr},
    {"network", "thresholds_db", nullptr},
    {"network", "thresholds_linear", nullptr},
    {"figure3", "gains_linear", "0.25,0.5,1,2"},
    {"figure3", "thresholds_db", "-30,-27,-20,-18"},
    {"figure4", "gains_linear", "0.25,0.5,1,2"},
    {"figure4", "thresholds_db", "-30,-27,-20,-18"},
    {"figure5", "interference_pct", "10,20,30,40,50,60,70,80,90"},
    {"figure5", "policies", "M1,M2,M3,M4,EPA,SNCPC"},
    {"figure6", "interference_pct", "10,20,30,40,50,60,70,80,90"},
    {"figure6", "policies", "M1,M2,M3,M4,EPA,SNCPC"},
};

// Pairs that describe one quantity in two units.
constexpr const char* kUnitPairs[][3] = {
    {"scenario", "noise_power_db", "noise_power_linear"},
    {"scenario", "threshold_db", "threshold_linear"},
    {"network", "thresholds_db", "thresholds_linear"},
};

const KeySpec* find_key(const std::string& section, const std::string& key) {
  for (const KeySpec& k : kSchema) {
    if (section == k.section && key == k.key) return &k;
  }
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string figure_section(int which) {
  if (which < 3 || which > 6) throw ConfigError("figure must be 3, 4, 5 or 6");
  return "figure" + std::to_string(which);
}

}  // namespace

double parse_real(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw ConfigError("invalid number '" + t + "' for key '" + key + "'");
  }
  return v;
}

long long parse_integer(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError("invalid integer '" + t + "' for key '" + key + "'");
  }
  return v;
}

std::vector<std::string> parse_word_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_real_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  for (const std::string& w : parse_word_list(text)) out.push_back(parse_real(w, key));
  return out;
}

RunConfig::RunConfig() {
  for (const KeySpec& k : kSchema) {
    if (k.default_value != nullptr) values_[k.section][k.key] = k.default_value;
  }
}

void RunConfig::set(const std::string& section, const std::string& key,
                    const std::string& value) {
  const KeySpec* spec = find_key(section, key);
  if (spec == nullptr) throw ConfigError("unknown config key '" + section + "." + key + "'");
  for (const auto& pair : kUnitPairs) {
    if (section != pair[0]) continue;
    // Setting one unit spelling replaces the other.
    if (key == pair[1]) values_[section].erase(pair[2]);
    if (key == pair[2]) values_[section].erase(pair[1]);
  }
  values_[section][key] = trim(value);
  if (section == "scenario" && key == "seed") seed_set_ = true;
}

void RunConfig::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override '" + assignment + "' is not section.key=value");
  }
  set(trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
      assignment.substr(eq + 1));
}

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::set<std::string> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    if (section.empty()) throw ConfigError(where + ": key outside of a [section]");
    const std::string key = trim(line.substr(0, eq));
    if (!seen.insert(section + "." + key).second) {
      throw ConfigError(where + ": duplicate key '" + section + "." + key + "'");
    }
    for (const auto& pair : kUnitPairs) {
      if (section != pair[0]) continue;
      const std::string other = key == pair[1] ? pair[2] : key == pair[2] ? pair[1] : "";
      if (!other.empty() && seen.count(section + "." + other)) {
        throw ConfigError(where + ": both '" + section + "." + key + "' and '" + section +
                          "." + other + "' given");
      }
    }
    try {
      cfg.set(section, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

bool RunConfig::has(const std::string& section, const std::string& key) const {
  const auto s = values_.find(section);
  return s != values_.end() && s->second.count(key) > 0;
}

std::string RunConfig::get(const std::string& section, const std::string& key) const {
  if (!has(section, key)) throw ConfigError("missing config key '" + section + "." + key + "'");
  return values_.at(section).at(key);
}

std::uint64_t RunConfig::resolved_seed(const std::optional<std::string>& env_seed) const {
  std::string text = "1";
  std::string key = "scenario.seed";
  if (seed_set_) {
    text = get("scenario", "seed");
  } else if (env_seed && !trim(*env_seed).empty()) {
    text = *env_seed;
    key = "SEED";
  }
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError("invalid seed '" + t + "' for key '" + key + "'");
  }
  return v;
}

std::vector<std::string> RunConfig::resolved_entries() const {
  std::vector<std::string> out;
  for (const auto& [section, keys] : values_) {
    for (const auto& [key, value] : keys) out.push_back(section + "." + key + "=" + value);
  }
  return out;
}

ScenarioSpec RunConfig::scenario(std::uint64_t seed) const {
  auto integer = [&](const char* key) {
    return parse_integer(get("scenario", key), std::string("scenario.") + key);
  };
  auto real = [&](const char* key) {
    return parse_real(get("scenario", key), std::string("scenario.") + key);
  };
  ScenarioSpec spec;
  spec.n_nodes = static_cast<int>(integer("nodes"));
  spec.trials = static_cast<int>(integer("trials"));
  spec.workers = static_cast<int>(integer("workers"));
  spec.max_iterations = static_cast<int>(integer("max_iterations"));
  spec.seed = seed;
  spec.rayleigh_sigma = real("rayleigh_sigma_linear");
  spec.noise_power = has("scenario", "noise_power_linear") ? real("noise_power_linear")
                                                           : db_to_linear(real("noise_power_db"));
  spec.threshold = has("scenario", "threshold_linear") ? real("threshold_linear")
                                                       : db_to_linear(real("threshold_db"));
  const long long levels = integer("grid_levels");
  if (levels < 1) throw ConfigError("scenario.grid_levels must be >= 1");
  const double p_max = real("p_max_linear");
  if (!(p_max > 0.0)) throw ConfigError("scenario.p_max_linear must be > 0");
  spec.grid = PowerGrid::linear(p_max, static_cast<std::size_t>(levels));
  spec.interference_fraction = real("interference_pct") / 100.0;
  if (has("scenario", "tagged_gain_linear")) spec.tagged_gain = real("tagged_gain_linear");

  const int truncation = static_cast<int>(integer("truncation"));
  try {
    spec.solver = parse_solver(get("scenario", "policy"), truncation);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(e.what()) + " for key 'scenario.policy'");
  }
  if (auto* epa = std::get_if<EpaBaseline>(&spec.solver)) {
    if (has("scenario", "epa_level_linear")) epa->level = real("epa_level_linear");
  }
  if (auto* nash = std::get_if<FullCsiNash>(&spec.solver)) {
    nash->epsilon = real("nash_epsilon_linear");
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

NetworkState RunConfig::network(const ScenarioSpec& spec) const {
  if (!has("network", "gains_linear")) {
    return trial_network(spec, draw_trial(spec, 0));
  }
  const std::vector<double> gains =
      parse_real_list(get("network", "gains_linear"), "network.gains_linear");
  if (gains.empty()) throw ConfigError("network.gains_linear is empty");
  std::vector<double> thresholds(gains.size(), spec.threshold);
  if (has("network", "thresholds_db") || has("network", "thresholds_linear")) {
    const bool db = has("network", "thresholds_db");
    const std::string key = db ? "thresholds_db" : "thresholds_linear";
    thresholds = parse_real_list(get("network", key), "network." + key);
    if (thresholds.size() != gains.size()) {
      throw ConfigError("network." + key + " needs one entry per gain");
    }
    if (db) {
      for (double& t : thresholds) t = db_to_linear(t);
    }
  }
  std::vector<NodeConfig> nodes;
  for (std::size_t i = 0; i < gains.size(); ++i) {
    nodes.push_back({static_cast<int>(i), gains[i], thresholds[i]});
  }
  try {
    return NetworkState(std::move(nodes), spec.noise_power);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<double> RunConfig::figure_gains(int which) const {
  const std::string s = figure_section(which);
  return parse_real_list(get(s, "gains_linear"), s + ".gains_linear");
}

std::vector<double> RunConfig::figure_thresholds_db(int which) const {
  const std::string s = figure_section(which);
  return parse_real_list(get(s, "thresholds_db"), s + ".thresholds_db");
}

std::vector<double> RunConfig::figure_fractions(int which) const {
  const std::string s = figure_section(which);
  std::vector<double> pct = parse_real_list(get(s, "interference_pct"), s + ".interference_pct");
  for (double& p : pct) p /= 100.0;
  return pct;
}

std::vector<SolverChoice> RunConfig::figure_policies(int which, int truncation) const {
  const std::string s = figure_section(which);
  std::vector<SolverChoice> out;
  for (const std::string& name : parse_word_list(get(s, "policies"))) {
    try {
      SolverChoice c = parse_solver(name, truncation);
      if (auto* epa = std::get_if<EpaBaseline>(&c)) {
        if (has("scenario", "epa_level_linear")) {
          epa->level = parse_real(get("scenario", "epa_level_linear"),
                                  "scenario.epa_level_linear");
        }
      }
      out.push_back(c);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(e.what()) + " for key '" + s + ".policies'");
    }
  }
  return out;
}

}  // namespace epibg::cli
