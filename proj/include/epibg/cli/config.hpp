#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "epibg/game_model.hpp"
#include "epibg/sim_harness.hpp"

namespace epibg::cli {

/// Bad config file, unknown key, or malformed value. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sectioned key=value configuration merged over the built-in defaults.
///
///   # comment
///   [scenario]
///   threshold_db = -20
///
/// Keys naming physical quantities end in _db or _linear; both spellings of
/// one quantity may not appear together.
class RunConfig {
 public:
  /// Defaults only.
  RunConfig();

  static RunConfig parse(const std::string& text, const std::string& origin = "config");
  static RunConfig load(const std::string& path);

  /// Applies "section.key=value" on top of the current values.
  void set(const std::string& assignment);
  void set(const std::string& section, const std::string& key, const std::string& value);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;

  /// Seed precedence: config value, then the SEED environment variable,
  /// then 1. `env_seed` is the raw SEED value, if any.
  std::uint64_t resolved_seed(const std::optional<std::string>& env_seed) const;

  /// One "section.key=value" entry per resolved key, sorted.
  std::vector<std::string> resolved_entries() const;

  ScenarioSpec scenario(std::uint64_t seed) const;
  /// Network for `solve`: explicit [network] gains, or trial 0 of the
  /// scenario when none are listed.
  NetworkState network(const ScenarioSpec& spec) const;

  std::vector<double> figure_gains(int which) const;
  std::vector<double> figure_thresholds_db(int which) const;
  std::vector<double> figure_fractions(int which) const;
  std::vector<SolverChoice> figure_policies(int which, int truncation) const;

 private:
  std::map<std::string, std::map<std::string, std::string>> values_;
  bool seed_set_ = false;
};

double parse_real(const std::string& text, const std::string& key);
long long parse_integer(const std::string& text, const std::string& key);
std::vector<double> parse_real_list(const std::string& text, const std::string& key);
std::vector<std::string> parse_word_list(const std::string& text);

}  // namespace epibg::cli
