#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "nullctl/experiments.hpp"

namespace nullctl::experiments {

/// Invalid or unknown configuration entry; the message names the key.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ConfigKey {
  std::string name;
  std::string fallback;
  std::string help;
};

/// Every recognised key with its default, in dump order.
const std::vector<ConfigKey>& config_keys();

using ConfigValues = std::map<std::string, std::string>;

/// Defaults for all keys. `output` falls back to $NULLCTL_OUTPUT_DIR when set.
ConfigValues default_values();

std::vector<std::string> preset_names();

/// Overrides applied on top of the defaults by a named preset.
ConfigValues preset_values(const std::string& name);

/// Applies `key = value` lines ('#' starts a comment) onto `values`.
void merge_config_text(ConfigValues& values, const std::string& text,
                       const std::string& source = "config");

void set_value(ConfigValues& values, const std::string& key, const std::string& value);

/// key=value lines for every key; feeding them back reproduces the run.
std::string dump_config(const ConfigValues& values);

struct ResolvedConfig {
  Scenario scenario;
  int n = 100;
  /// 0 means stable_time_steps.
  int m = 500;
  EpsRule eps;
  CgOptions cg;
  std::vector<int> n_list;
  int m0 = 2000;
  int n0 = 400;
  std::vector<double> tau_list;
  SigmaRule sigma_rule = SigmaRule::fixed;
  int m_cap = 500000;
  InitialData control;
  int jobs = 1;
  std::string output;
  bool svg = false;
  int stride = 1;
};

ResolvedConfig resolve_config(const ConfigValues& values);

}  // namespace nullctl::experiments
