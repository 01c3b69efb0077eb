// Command-line driver: nullctl <subcommand> [--preset figN] [--config FILE] [--KEY VALUE ...]
//
// Exit codes: 0 success, 1 solver failure, 2 usage error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "nullctl/config.hpp"
#include "nullctl/output.hpp"

namespace fs = std::filesystem;
using namespace nullctl;
using namespace nullctl::experiments;

namespace {

constexpr int kSolverFailure = 1;
constexpr int kUsageError = 2;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Outputs {
  fs::path dir;
  std::string label;

  fs::path path(const std::string& suffix) const { return dir / (label + "_" + suffix); }

  template <typename Writer>
  void write(const std::string& suffix, Writer&& writer) const {
    const fs::path p = path(suffix);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + p.string() + " for writing");
    writer(out);
    if (!out) throw std::runtime_error("failed writing " + p.string());
    std::cout << "wrote " << p.string() << "\n";
  }
};

int resolve_steps(const ResolvedConfig& rc) {
  if (rc.m > 0) return rc.m;
  return stable_time_steps(rc.scenario.params, make_grid(rc.n), rc.scenario.horizon);
}

std::vector<double> column(const std::vector<SweepRow>& rows, double SweepRow::*field) {
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r.*field);
  return out;
}

// Fits only when every value is usable; a flagged table reports no slope.
void add_fit(std::vector<std::pair<std::string, SlopeFit>>& fits, const std::string& name,
             const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() < 3) return;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (!(xs[i] > 0 && ys[i] > 0 && std::isfinite(ys[i]))) return;
  fits.emplace_back(name, fit_slope(xs, ys));
}

int finish_table(const Outputs& out, const std::string& suffix, const SweepTable& table,
                 const std::vector<std::pair<std::string, SlopeFit>>& fits) {
  out.write(suffix + ".csv", [&](std::ostream& os) { write_sweep_csv(os, table.rows); });
  if (!fits.empty()) {
    out.write(suffix + "_fit.csv", [&](std::ostream& os) { write_fit_csv(os, fits); });
    for (const auto& [name, f] : fits)
      std::cout << "slope(" << name << ") = " << format_number(f.slope) << " over "
                << f.points_used << " points\n";
  }
  if (table.failure) {
    std::cerr << to_string(*table.failure) << ": " << table.failure_message << "\n";
    return kSolverFailure;
  }
  return 0;
}

int run_simulate(const ResolvedConfig& rc, const Outputs& out) {
  const auto run = run_uncontrolled(rc.scenario, rc.n, resolve_steps(rc));
  out.write("trajectory.csv", [&](std::ostream& os) {
    write_trajectory_csv(os, run.trajectory, run.steps_completed, rc.stride);
  });
  out.write("summary.csv", [&](std::ostream& os) { write_summary_csv(os, run); });
  if (run.blew_up) {
    std::cerr << "blow_up: solution norm exceeded threshold after step " << run.steps_completed
              << "\n";
    return kSolverFailure;
  }
  return 0;
}

int run_control(const ResolvedConfig& rc, const Outputs& out) {
  const auto run = run_controlled(rc.scenario, rc.n, resolve_steps(rc), rc.eps, rc.cg);
  const auto& sol = run.solution;
  out.write("control_trajectory.csv", [&](std::ostream& os) {
    write_trajectory_csv(os, sol.trajectory, sol.trajectory.m_steps(), rc.stride);
  });
  out.write("diagnostics.csv", [&](std::ostream& os) { write_control_csv(os, run); });
  std::cout << "cost " << format_number(sol.cost) << ", target " << format_number(sol.target_norm)
            << ", M " << format_number(sol.big_m) << ", CG iterations " << sol.cg_iterations
            << "\n";
  return 0;
}

int run_sweep_mesh(const ResolvedConfig& rc, const Outputs& out) {
  if (rc.n_list.size() < 3) throw UsageError("sweep-mesh needs at least 3 grid sizes in n_list");
  MeshSweepOptions opts{rc.n_list, rc.m0, rc.n0, rc.eps, rc.cg, rc.jobs};
  const auto table = run_mesh_sweep(rc.scenario, opts);
  const auto dx = column(table.rows, &SweepRow::dx);
  std::vector<std::pair<std::string, SlopeFit>> fits;
  if (!table.failure) {
    add_fit(fits, "NyT", dx, column(table.rows, &SweepRow::nyt));
    add_fit(fits, "Nv", dx, column(table.rows, &SweepRow::nv));
    add_fit(fits, "Inf_eps(F_eps)", dx, column(table.rows, &SweepRow::inf_f));
  }
  if (rc.svg)
    out.write("sweep_mesh.svg", [&](std::ostream& os) {
      write_loglog_svg(os, rc.scenario.label + ": mesh refinement", "dx",
                       {{"Nv", dx, column(table.rows, &SweepRow::nv)},
                        {"NyT", dx, column(table.rows, &SweepRow::nyt)},
                        {"Inf_eps(F_eps)", dx, column(table.rows, &SweepRow::inf_f)}});
    });
  return finish_table(out, "sweep_mesh", table, fits);
}

int run_sweep_tau(const ResolvedConfig& rc, const Outputs& out) {
  TauSweepOptions opts;
  opts.tau_list = rc.tau_list;
  opts.sigma_rule = rc.sigma_rule;
  opts.n = rc.n;
  opts.m = rc.m;
  opts.m_cap = rc.m_cap;
  opts.eps = rc.eps;
  opts.cg = rc.cg;
  opts.jobs = rc.jobs;
  const auto table = run_tau_sweep(rc.scenario, opts);
  if (rc.svg) {
    const auto tau = column(table.rows, &SweepRow::tau);
    out.write("sweep_tau.svg", [&](std::ostream& os) {
      write_loglog_svg(os, rc.scenario.label + ": tau sweep", "tau",
                       {{"big_M", tau, column(table.rows, &SweepRow::big_m)},
                        {"free_norm", tau, column(table.rows, &SweepRow::free_norm)}});
    });
  }
  return finish_table(out, "sweep_tau", table, {});
}

AverageOptions average_options(const ResolvedConfig& rc) {
  AverageOptions opts;
  opts.tau_list = rc.tau_list;
  opts.sigma_rule = rc.sigma_rule;
  opts.n = rc.n;
  opts.m = resolve_steps(rc);
  opts.jobs = rc.jobs;
  return opts;
}

int run_avg(const ResolvedConfig& rc, const Outputs& out) {
  if (rc.tau_list.size() < 4) throw UsageError("avg-convergence needs at least 4 tau values");
  const auto table = run_average_convergence(rc.scenario, average_options(rc));
  const auto tau = column(table.rows, &SweepRow::tau);
  const auto diff = column(table.rows, &SweepRow::avg_diff);
  std::vector<std::pair<std::string, SlopeFit>> fits;
  if (!table.failure) add_fit(fits, "avg_diff", tau, diff);
  if (rc.svg)
    out.write("avg_convergence.svg", [&](std::ostream& os) {
      write_loglog_svg(os, rc.scenario.label + ": mean difference", "tau", {{"avg_diff", tau, diff}});
    });
  return finish_table(out, "avg_convergence", table, fits);
}

int run_limit(const ResolvedConfig& rc, const Outputs& out) {
  const auto table = run_limit_check(rc.scenario, average_options(rc), rc.control);
  const auto tau = column(table.rows, &SweepRow::tau);
  const auto diff = column(table.rows, &SweepRow::limit_diff);
  std::vector<std::pair<std::string, SlopeFit>> fits;
  if (!table.failure) add_fit(fits, "limit_diff", tau, diff);
  if (rc.svg)
    out.write("limit_check.svg", [&](std::ostream& os) {
      write_loglog_svg(os, rc.scenario.label + ": distance to the nonlocal limit", "tau",
                       {{"limit_diff", tau, diff}});
    });
  return finish_table(out, "limit_check", table, fits);
}

const std::map<std::string, std::string> kSubcommands = {
    {"simulate", "uncontrolled trajectory"},
    {"control", "penalized HUM control"},
    {"sweep-mesh", "HUM diagnostics under mesh refinement"},
    {"sweep-tau", "HUM constant along a tau sequence"},
    {"avg-convergence", "mean difference of u and v along a tau sequence"},
    {"limit-check", "distance of v to the nonlocal limit along a tau sequence"},
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized HUM null controls for a coupled fast-diffusion system"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  std::string preset, config_file;
  bool dump = false;
  std::map<std::string, std::string> flag_values;
  std::vector<std::tuple<std::string, std::string, CLI::Option*>> key_options;
  std::map<std::string, CLI::App*> subs;

  std::string preset_help = "preset:";
  for (const auto& name : preset_names()) preset_help += " " + name;
  for (const auto& [name, help] : kSubcommands) {
    CLI::App* sub = app.add_subcommand(name, help);
    subs[name] = sub;
    sub->add_option("--preset", preset, preset_help);
    sub->add_option("--config", config_file, "key=value file applied after the preset");
    sub->add_flag("--dump-config", dump, "print the resolved configuration and exit");
    for (const auto& key : config_keys()) {
      std::string names = "--" + key.name;
      std::string dashed = key.name;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != key.name) names += ",--" + dashed;
      auto* opt = sub->add_option(names, flag_values[name + "/" + key.name],
                                  key.help + " [" + key.fallback + "]");
      key_options.emplace_back(name, key.name, opt);
    }
  }

  if (argc < 2) {
    std::cerr << app.help();
    return kUsageError;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  std::string subcommand;
  for (const auto& [name, sub] : subs)
    if (sub->parsed()) subcommand = name;

  try {
    ConfigValues values = default_values();
    if (!preset.empty())
      for (const auto& [k, v] : preset_values(preset)) set_value(values, k, v);
    if (!config_file.empty()) merge_config_text(values, read_file(config_file), config_file);
    for (const auto& [owner, key, opt] : key_options)
      if (owner == subcommand && opt->count() > 0)
        set_value(values, key, flag_values[owner + "/" + key]);

    const ResolvedConfig rc = resolve_config(values);
    if (dump) {
      std::cout << dump_config(values);
      return 0;
    }

    Outputs out{fs::path(rc.output), rc.scenario.label};
    fs::create_directories(out.dir);
    if (subcommand == "simulate") return run_simulate(rc, out);
    if (subcommand == "control") return run_control(rc, out);
    if (subcommand == "sweep-mesh") return run_sweep_mesh(rc, out);
    if (subcommand == "sweep-tau") return run_sweep_tau(rc, out);
    if (subcommand == "avg-convergence") return run_avg(rc, out);
    return run_limit(rc, out);
  } catch (const SolverError& e) {
    std::cerr << e.what() << "\n";
    return kSolverFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolverFailure;
  }
}
