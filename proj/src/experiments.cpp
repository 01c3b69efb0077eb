#include "nullctl/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <regex>
#include <stdexcept>

namespace nullctl::experiments {

namespace {

const double pi = std::acos(-1.0);

std::string number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& text) {
  std::size_t used = 0;
  double value = 0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(value))
    throw std::invalid_argument("not a finite number: '" + text + "'");
  return value;
}

struct RowOutcome {
  SweepRow row;
  std::optional<SolverFailure> failure;
  std::string message;
};

template <typename Fn>
RowOutcome guarded(Fn&& fn) {
  RowOutcome out;
  try {
    out.row = fn();
  } catch (const SolverError& e) {
    out.failure = e.kind();
    out.message = e.what();
  }
  return out;
}

// Keeps rows up to the first failure not absorbed into a flag.
SweepTable assemble(std::vector<RowOutcome> outcomes, bool flag_blow_up) {
  SweepTable table;
  for (auto& o : outcomes) {
    if (o.failure && flag_blow_up && *o.failure == SolverFailure::blow_up) {
      o.row.flag = o.row.flag.empty() ? "blow_up" : o.row.flag + ";blow_up";
    } else if (o.failure) {
      table.failure = o.failure;
      table.failure_message = o.message;
      break;
    }
    table.rows.push_back(std::move(o.row));
  }
  return table;
}

void require_positive_taus(const std::vector<double>& taus) {
  for (double t : taus)
    if (!(t > 0 && t <= 1)) throw std::invalid_argument("tau values must lie in (0,1]");
}

}  // namespace

InitialData InitialData::parse(const std::string& text) {
  static const std::regex pattern(R"(^\s*(zero|sine|indicator|constant)\s*(?:\(([^)]*)\))?\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, pattern))
    throw std::invalid_argument("unknown initial data '" + text +
                                "' (expected zero, sine(k), indicator(a,b), constant(c))");
  std::vector<double> args;
  const std::string inner = m[2].str();
  if (m[2].matched) {
    std::size_t start = 0;
    while (start <= inner.size()) {
      const std::size_t comma = inner.find(',', start);
      std::string piece = inner.substr(start, comma == std::string::npos ? std::string::npos
                                                                          : comma - start);
      piece.erase(0, piece.find_first_not_of(' '));
      piece.erase(piece.find_last_not_of(' ') + 1);
      args.push_back(parse_double(piece));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  InitialData d;
  const std::string name = m[1].str();
  auto need = [&](std::size_t count) {
    if (args.size() != count)
      throw std::invalid_argument("'" + name + "' takes " + std::to_string(count) +
                                  " argument(s) in '" + text + "'");
  };
  if (name == "zero") {
    if (m[2].matched) need(0);
    d.kind = Kind::zero;
  } else if (name == "sine") {
    need(1);
    d.kind = Kind::sine;
    d.p1 = args[0];
  } else if (name == "indicator") {
    need(2);
    d.kind = Kind::indicator;
    d.p1 = args[0];
    d.p2 = args[1];
    if (!(0 <= d.p1 && d.p1 < d.p2 && d.p2 <= 1))
      throw std::invalid_argument("indicator(a,b) needs 0 <= a < b <= 1");
  } else {
    need(1);
    d.kind = Kind::constant;
    d.p1 = args[0];
  }
  return d;
}

std::string InitialData::to_string() const {
  switch (kind) {
    case Kind::zero:
      return "zero";
    case Kind::sine:
      return "sine(" + number(p1) + ")";
    case Kind::indicator:
      return "indicator(" + number(p1) + "," + number(p2) + ")";
    case Kind::constant:
      return "constant(" + number(p1) + ")";
  }
  return "zero";
}

Field<double> InitialData::sample(const Grid1D<double>& g) const {
  switch (kind) {
    case Kind::zero:
      return g.zeros();
    case Kind::sine: {
      const double k = p1;
      return g.sample([k](double x) { return std::sin(k * pi * x); });
    }
    case Kind::indicator:
      return indicator(p1, p2, g);
    case Kind::constant:
      return Field<double>::Constant(g.n_nodes(), p1);
  }
  return g.zeros();
}

SigmaRule parse_sigma_rule(const std::string& text) {
  if (text == "two_over_tau") return SigmaRule::two_over_tau;
  if (text == "one_over_tau") return SigmaRule::one_over_tau;
  if (text == "fixed") return SigmaRule::fixed;
  throw std::invalid_argument("unknown sigma rule '" + text +
                              "' (expected two_over_tau, one_over_tau, fixed)");
}

std::string to_string(SigmaRule rule) {
  switch (rule) {
    case SigmaRule::two_over_tau:
      return "two_over_tau";
    case SigmaRule::one_over_tau:
      return "one_over_tau";
    case SigmaRule::fixed:
      return "fixed";
  }
  return "fixed";
}

double apply_sigma_rule(SigmaRule rule, double tau, double fixed_sigma) {
  switch (rule) {
    case SigmaRule::two_over_tau:
      return 2 / tau;
    case SigmaRule::one_over_tau:
      return 1 / tau;
    case SigmaRule::fixed:
      return fixed_sigma;
  }
  return fixed_sigma;
}

EpsRule EpsRule::parse(const std::string& text) {
  if (text == "h4") return {};
  const double v = parse_double(text);
  if (!(v > 0)) throw std::invalid_argument("eps must be positive, got '" + text + "'");
  return {false, v};
}

std::string EpsRule::to_string() const { return mesh_tied ? "h4" : number(value); }

double EpsRule::at(double h) const { return mesh_tied ? h * h * h * h : value; }

SlopeFit fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("slope fit needs paired samples");
  if (xs.size() < 3) throw std::invalid_argument("slope fit needs at least 3 points");
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (!(xs[i] > 0 && ys[i] > 0 && std::isfinite(xs[i]) && std::isfinite(ys[i])))
      throw std::invalid_argument("slope fit needs finite positive values");
  const std::size_t first = xs.size() >= 4 ? 1 : 0;
  const double count = static_cast<double>(xs.size() - first);
  double mx = 0, my = 0;
  for (std::size_t i = first; i < xs.size(); ++i) {
    mx += std::log(xs[i]);
    my += std::log(ys[i]);
  }
  mx /= count;
  my /= count;
  double sxx = 0, sxy = 0;
  for (std::size_t i = first; i < xs.size(); ++i) {
    const double dx = std::log(xs[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(ys[i]) - my);
  }
  if (!(sxx > 0)) throw std::invalid_argument("slope fit needs distinct abscissae");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.points_used = static_cast<int>(count);
  return fit;
}

UncontrolledRun run_uncontrolled(const Scenario& s, int n, int m) {
  const auto g = make_grid(n);
  const auto tm = make_time_mesh(s.horizon, m);
  const CoupledSystem<double> sys(s.params, g, tm);
  UncontrolledRun run{Trajectory<double>(g, tm)};
  Field<double> u = s.u0.sample(g), v = s.v0.sample(g);
  detail::pin_dirichlet<double>(u);
  run.trajectory.u.col(0) = u;
  run.trajectory.v.col(0) = v;
  for (int step = 1; step <= m; ++step) {
    detail::forward_step<double>(sys, u, v, nullptr);
    try {
      detail::check_growth(u, v, g, step);
    } catch (const SolverError&) {
      run.blew_up = true;
      break;
    }
    run.trajectory.u.col(step) = u;
    run.trajectory.v.col(step) = v;
    run.steps_completed = step;
  }
  return run;
}

ControlledRun run_controlled(const Scenario& s, int n, int m, const EpsRule& eps,
                             const CgOptions& cg) {
  const auto g = make_grid(n);
  const CoupledSystem<double> sys(s.params, g, make_time_mesh(s.horizon, m));
  const double e = eps.at(g.h());
  ControlledRun run{solve_penalized_hum(sys, s.u0.sample(g), s.v0.sample(g), e, cg)};
  const auto& sol = run.solution;
  run.target_bound_holds = sol.target_norm <= sol.big_m * std::sqrt(e);
  run.cost_bound_holds = sol.cost <= sol.big_m;
  return run;
}

int mesh_sweep_steps(int n, int m0, int n0) {
  if (m0 < 1 || n0 < 1) throw std::invalid_argument("mesh sweep base m0, n0 must be positive");
  return std::max(1, static_cast<int>(std::lround(static_cast<double>(m0) * n / n0)));
}

SweepTable run_mesh_sweep(const Scenario& s, const MeshSweepOptions& opts) {
  const auto& ns = opts.n_list;
  if (ns.size() < 3) throw std::invalid_argument("mesh sweep needs at least 3 grid sizes");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] < 1) throw std::invalid_argument("grid sizes must be positive");
    if (i > 0 && ns[i] <= ns[i - 1]) throw std::invalid_argument("grid sizes must increase");
  }
  opts.cg.validate();
  auto outcomes = ordered_map<RowOutcome>(static_cast<int>(ns.size()), opts.jobs, [&](int i) {
    return guarded([&] {
      SweepRow row;
      row.n = ns[i];
      row.m = mesh_sweep_steps(ns[i], opts.m0, opts.n0);
      const auto run = run_controlled(s, row.n, row.m, opts.eps, opts.cg);
      const auto& sol = run.solution;
      row.tau = s.params.tau;
      row.dx = sol.trajectory.grid.h();
      row.nv = sol.cost;
      row.nyt = sol.target_norm;
      row.inf_f = sol.inf_F;
      row.big_m = sol.big_m;
      row.free_norm = sol.free_norm;
      row.nyt_unweighted = sol.target_norm_unweighted;
      row.cg_iterations = sol.cg_iterations;
      return row;
    });
  });
  return assemble(std::move(outcomes), false);
}

SweepTable run_tau_sweep(const Scenario& s, const TauSweepOptions& opts) {
  require_positive_taus(opts.tau_list);
  if (opts.m_cap < 1) throw std::invalid_argument("time-step cap must be positive");
  opts.cg.validate();
  const auto g = make_grid(opts.n);
  auto outcomes =
      ordered_map<RowOutcome>(static_cast<int>(opts.tau_list.size()), opts.jobs, [&](int i) {
        SweepRow row;
        row.tau = opts.tau_list[i];
        row.dx = g.h();
        row.n = opts.n;
        Scenario local = s;
        local.params.tau = row.tau;
        local.params.sigma = apply_sigma_rule(opts.sigma_rule, row.tau, s.params.sigma);
        row.m = opts.m > 0 ? opts.m : stable_time_steps(local.params, g, s.horizon);
        if (row.m > opts.m_cap) {
          row.m = opts.m_cap;
          row.flag = "m_capped";
        }
        RowOutcome out = guarded([&] {
          SweepRow done = row;
          const auto run = run_controlled(local, done.n, done.m, opts.eps, opts.cg);
          const auto& sol = run.solution;
          done.nv = sol.cost;
          done.nyt = sol.target_norm;
          done.inf_f = sol.inf_F;
          done.big_m = sol.big_m;
          done.free_norm = sol.free_norm;
          done.nyt_unweighted = sol.target_norm_unweighted;
          done.cg_iterations = sol.cg_iterations;
          return done;
        });
        if (out.failure) out.row = row;
        return out;
      });
  return assemble(std::move(outcomes), true);
}

SweepTable run_average_convergence(const Scenario& s, const AverageOptions& opts) {
  require_positive_taus(opts.tau_list);
  const auto g = make_grid(opts.n);
  const auto tm = make_time_mesh(s.horizon, opts.m);
  auto outcomes =
      ordered_map<RowOutcome>(static_cast<int>(opts.tau_list.size()), opts.jobs, [&](int i) {
        SweepRow row;
        row.tau = opts.tau_list[i];
        row.dx = g.h();
        row.n = opts.n;
        row.m = opts.m;
        RowOutcome out = guarded([&] {
          SystemParams<double> p = s.params;
          p.tau = row.tau;
          p.sigma = apply_sigma_rule(opts.sigma_rule, row.tau, s.params.sigma);
          const CoupledSystem<double> sys(p, g, tm);
          const auto traj = solve_forward(sys, s.u0.sample(g), s.v0.sample(g));
          const auto [mu, mv] = average_series(traj);
          SweepRow done = row;
          done.avg_diff = l2_norm_time(TimeSeries<double>(mu - mv), tm);
          return done;
        });
        if (out.failure) out.row = row;
        return out;
      });
  return assemble(std::move(outcomes), true);
}

SweepTable run_limit_check(const Scenario& s, const AverageOptions& opts,
                           const InitialData& control_profile) {
  require_positive_taus(opts.tau_list);
  if (s.params.d == 0)
    throw std::invalid_argument("limit check needs d != 0 to eliminate the second component");
  const auto g = make_grid(opts.n);
  const auto tm = make_time_mesh(s.horizon, opts.m);
  Control<double> h(g, tm);
  const Field<double> profile = control_profile.sample(g);
  for (int k = 1; k <= tm.m_steps(); ++k) h.slice(k) = profile;
  h.restrict_to(indicator(s.params.omega_lo, s.params.omega_hi, g));

  // limit equation: v -> -(c/d) mean(u), so u feels b_eff mean(u)
  const double ratio = -s.params.c / s.params.d;
  const auto limit = solve_nonlocal_linear(s.params.a, s.params.b * ratio, s.u0.sample(g), h, tm, g);

  auto outcomes =
      ordered_map<RowOutcome>(static_cast<int>(opts.tau_list.size()), opts.jobs, [&](int i) {
        SweepRow row;
        row.tau = opts.tau_list[i];
        row.dx = g.h();
        row.n = opts.n;
        row.m = opts.m;
        RowOutcome out = guarded([&] {
          SystemParams<double> p = s.params;
          p.tau = row.tau;
          p.sigma = apply_sigma_rule(opts.sigma_rule, row.tau, s.params.sigma);
          const auto traj = solve_forward(CoupledSystem<double>(p, g, tm), s.u0.sample(g),
                                          s.v0.sample(g), h);
          TimeSeries<double> gap(tm.m_steps() + 1);
          for (int k = 0; k <= tm.m_steps(); ++k) {
            const double xi = ratio * mean_value(limit.y.col(k), g);
            gap(k) = l2_norm(Field<double>(traj.v.col(k).array() - xi), g);
          }
          SweepRow done = row;
          done.limit_diff = l2_norm_time(gap, tm);
          return done;
        });
        if (out.failure) out.row = row;
        return out;
      });
  return assemble(std::move(outcomes), true);
}

}  // namespace nullctl::experiments
