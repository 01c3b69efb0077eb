#include "nullctl/config.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

namespace nullctl::experiments {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string piece;
  std::istringstream in(text);
  while (std::getline(in, piece, sep)) out.push_back(trim(piece));
  return out;
}

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError("key '" + key + "': " + what);
}

double to_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v))
    fail(key, "expected a number, got '" + text + "'");
  return v;
}

int to_int(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || v < std::numeric_limits<int>::min() ||
      v > std::numeric_limits<int>::max())
    fail(key, "expected an integer, got '" + text + "'");
  return static_cast<int>(v);
}

int to_positive_int(const std::string& key, const std::string& text) {
  const int v = to_int(key, text);
  if (v < 1) fail(key, "must be at least 1");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  fail(key, "expected true or false, got '" + text + "'");
}

template <typename Fn>
auto wrapped(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    fail(key, e.what());
  }
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"label", "custom", "name used for output files"},
      {"a", "2", "coefficient of u in the u equation"},
      {"b", "-0.5", "coefficient of v in the u equation"},
      {"c", "5.5", "coefficient of u in the v equation"},
      {"d", "-4.5", "coefficient of v in the v equation"},
      {"tau", "0.5", "time scale of v"},
      {"sigma", "2", "diffusion of v (used when sigma_rule=fixed)"},
      {"T", "0.1", "time horizon"},
      {"omega", "0.3,0.8", "control window lo,hi"},
      {"u0", "sine(1)", "initial u: zero, sine(k), indicator(a,b), constant(c)"},
      {"v0", "indicator(0.2,0.7)", "initial v, same vocabulary"},
      {"N", "100", "interior grid nodes"},
      {"M", "500", "time steps, or auto for the stability bound"},
      {"eps", "h4", "penalization: h4 or a positive number"},
      {"cg_tol", "1e-8", "CG relative residual target"},
      {"cg_max_iter", "500", "CG iteration cap"},
      {"n_list", "20,40,80,160", "grid sizes for sweep-mesh"},
      {"m0", "2000", "sweep-mesh base time steps"},
      {"n0", "400", "sweep-mesh base grid size (M = m0 N / n0)"},
      {"tau_list", "0.5,0.25,0.12,0.06,0.03", "tau values for tau sweeps"},
      {"sigma_rule", "fixed", "two_over_tau, one_over_tau or fixed"},
      {"m_cap", "500000", "largest M a sweep row may use"},
      {"control", "zero", "time-constant control profile for limit-check"},
      {"jobs", "1", "worker threads for sweep rows"},
      {"output", "nullctl-out", "output directory (default $NULLCTL_OUTPUT_DIR)"},
      {"svg", "false", "also write log-log SVG charts"},
      {"stride", "1", "time stride of trajectory dumps"},
  };
  return keys;
}

ConfigValues default_values() {
  ConfigValues v;
  for (const auto& k : config_keys()) v[k.name] = k.fallback;
  if (const char* env = std::getenv("NULLCTL_OUTPUT_DIR"); env && *env) v["output"] = env;
  return v;
}

std::vector<std::string> preset_names() {
  return {"fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"};
}

ConfigValues preset_values(const std::string& name) {
  if (name == "fig1" || name == "fig3") return {{"label", name}, {"d", "-4.5"}};
  if (name == "fig2" || name == "fig4") return {{"label", name}, {"d", "5"}};
  if (name == "fig5")
    return {{"label", name},      {"d", "-5"},      {"n_list", "20,40,80,160"},
            {"m0", "2000"},       {"n0", "400"},    {"cg_max_iter", "5000"}};
  if (name == "fig6")
    return {{"label", name},
            {"d", "-5"},
            {"sigma_rule", "two_over_tau"},
            {"N", "400"},
            {"M", "2000"},
            {"tau_list", "0.5,0.25,0.12,0.06,0.03"},
            {"cg_max_iter", "10000"}};
  if (name == "fig7")
    return {{"label", name},
            {"d", "4.5"},
            {"sigma_rule", "two_over_tau"},
            {"N", "24"},
            {"M", "auto"},
            {"tau_list", "0.25,0.18,0.12,0.09,0.06"},
            {"cg_max_iter", "10000"}};
  if (name == "fig8")
    return {{"label", name},
            {"a", "-3"},
            {"b", "2"},
            {"c", "1"},
            {"d", "-1"},
            {"sigma_rule", "one_over_tau"},
            {"N", "100"},
            {"M", "2000"},
            {"tau_list", "0.2,0.1,0.05,0.025,0.0125"}};
  throw ConfigError("unknown preset '" + name + "' (expected fig1 .. fig8)");
}

void set_value(ConfigValues& values, const std::string& key, const std::string& value) {
  for (const auto& k : config_keys())
    if (k.name == key) {
      values[key] = trim(value);
      return;
    }
  throw ConfigError("unknown key '" + key + "'");
}

void merge_config_text(ConfigValues& values, const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(number) + ": expected key=value");
    try {
      set_value(values, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

std::string dump_config(const ConfigValues& values) {
  std::string out;
  for (const auto& k : config_keys()) {
    const auto it = values.find(k.name);
    out += k.name + "=" + (it == values.end() ? k.fallback : it->second) + "\n";
  }
  return out;
}

ResolvedConfig resolve_config(const ConfigValues& values) {
  auto get = [&](const std::string& key) {
    const auto it = values.find(key);
    if (it == values.end()) fail(key, "missing");
    return it->second;
  };
  ResolvedConfig rc;
  auto& s = rc.scenario;
  s.label = get("label");
  if (s.label.empty() || s.label.find_first_of("/\\") != std::string::npos)
    fail("label", "must be a nonempty file-name fragment");
  auto& p = s.params;
  p.a = to_double("a", get("a"));
  p.b = to_double("b", get("b"));
  p.c = to_double("c", get("c"));
  p.d = to_double("d", get("d"));
  p.tau = to_double("tau", get("tau"));
  p.sigma = to_double("sigma", get("sigma"));
  s.horizon = to_double("T", get("T"));
  if (!(s.horizon > 0)) fail("T", "must be positive");
  const auto omega = split(get("omega"), ',');
  if (omega.size() != 2) fail("omega", "expected lo,hi");
  p.omega_lo = to_double("omega", omega[0]);
  p.omega_hi = to_double("omega", omega[1]);
  if (!(p.tau > 0)) fail("tau", "must be positive");
  if (!(p.sigma > 0)) fail("sigma", "must be positive");
  if (!(0 <= p.omega_lo && p.omega_lo < p.omega_hi && p.omega_hi <= 1))
    fail("omega", "needs 0 <= lo < hi <= 1");
  s.u0 = wrapped("u0", [&] { return InitialData::parse(get("u0")); });
  s.v0 = wrapped("v0", [&] { return InitialData::parse(get("v0")); });

  rc.n = to_positive_int("N", get("N"));
  rc.m = get("M") == "auto" ? 0 : to_positive_int("M", get("M"));
  rc.eps = wrapped("eps", [&] { return EpsRule::parse(get("eps")); });
  rc.cg.rel_tol = to_double("cg_tol", get("cg_tol"));
  rc.cg.max_iter = to_int("cg_max_iter", get("cg_max_iter"));
  wrapped("cg_tol", [&] {
    rc.cg.validate();
    return 0;
  });

  for (const auto& item : split(get("n_list"), ','))
    rc.n_list.push_back(to_positive_int("n_list", item));
  rc.m0 = to_positive_int("m0", get("m0"));
  rc.n0 = to_positive_int("n0", get("n0"));
  for (const auto& item : split(get("tau_list"), ',')) {
    const double t = to_double("tau_list", item);
    if (!(t > 0 && t <= 1)) fail("tau_list", "values must lie in (0,1]");
    rc.tau_list.push_back(t);
  }
  rc.sigma_rule = wrapped("sigma_rule", [&] { return parse_sigma_rule(get("sigma_rule")); });
  rc.m_cap = to_positive_int("m_cap", get("m_cap"));
  rc.control = wrapped("control", [&] { return InitialData::parse(get("control")); });
  rc.jobs = to_positive_int("jobs", get("jobs"));
  rc.output = get("output");
  if (rc.output.empty()) fail("output", "must not be empty");
  rc.svg = to_bool("svg", get("svg"));
  rc.stride = to_positive_int("stride", get("stride"));
  return rc;
}

}  // namespace nullctl::experiments
