#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nullctl/hum.hpp"
#include "nullctl/mesh.hpp"
#include "nullctl/params.hpp"
#include "nullctl/solvers.hpp"

namespace nullctl::experiments {

/// Named initial profile: zero, sine(k), indicator(a,b) or constant(c).
struct InitialData {
  enum class Kind { zero, sine, indicator, constant };
  Kind kind = Kind::zero;
  double p1 = 0;
  double p2 = 0;

  static InitialData parse(const std::string& text);
  std::string to_string() const;
  Field<double> sample(const Grid1D<double>& g) const;
};

enum class SigmaRule { two_over_tau, one_over_tau, fixed };

SigmaRule parse_sigma_rule(const std::string& text);
std::string to_string(SigmaRule rule);
double apply_sigma_rule(SigmaRule rule, double tau, double fixed_sigma);

/// eps = h^4 or a fixed positive value.
struct EpsRule {
  bool mesh_tied = true;
  double value = 0;

  static EpsRule parse(const std::string& text);
  std::string to_string() const;
  double at(double h) const;
};

struct Scenario {
  std::string label = "custom";
  SystemParams<double> params;
  InitialData u0;
  InitialData v0;
  double horizon = 0.1;
};

inline constexpr double kBlank = std::numeric_limits<double>::quiet_NaN();

/// One table row; NaN marks an unused column.
struct SweepRow {
  double tau = kBlank;
  double dx = kBlank;
  int n = 0;
  int m = 0;
  double nv = kBlank;
  double nyt = kBlank;
  double inf_f = kBlank;
  double big_m = kBlank;
  double free_norm = kBlank;
  double avg_diff = kBlank;
  double nyt_unweighted = kBlank;
  double limit_diff = kBlank;
  int cg_iterations = 0;
  std::string flag;
};

struct SlopeFit {
  double slope = 0;
  double intercept = 0;
  int points_used = 0;
};

/// Least-squares slope of log y against log x; the first point is dropped
/// when four or more are given.
SlopeFit fit_slope(const std::vector<double>& xs, const std::vector<double>& ys);

struct SweepTable {
  std::vector<SweepRow> rows;
  /// Set when a row failed and the remaining rows were dropped.
  std::optional<SolverFailure> failure;
  std::string failure_message;
};

struct UncontrolledRun {
  Trajectory<double> trajectory;
  /// Last completed step; less than M after a blow-up.
  int steps_completed = 0;
  bool blew_up = false;
};

struct ControlledRun {
  HumSolution<double> solution;
  bool target_bound_holds = false;
  bool cost_bound_holds = false;
};

UncontrolledRun run_uncontrolled(const Scenario& s, int n, int m);

ControlledRun run_controlled(const Scenario& s, int n, int m, const EpsRule& eps,
                             const CgOptions& cg);

struct MeshSweepOptions {
  std::vector<int> n_list;
  int m0 = 2000;
  int n0 = 400;
  EpsRule eps;
  CgOptions cg;
  int jobs = 1;
};

/// Time steps M = round(m0 N / n0) so dt/h stays fixed along the sweep.
int mesh_sweep_steps(int n, int m0, int n0);

SweepTable run_mesh_sweep(const Scenario& s, const MeshSweepOptions& opts);

struct TauSweepOptions {
  std::vector<double> tau_list;
  SigmaRule sigma_rule = SigmaRule::two_over_tau;
  int n = 400;
  /// 0 selects stable_time_steps per row.
  int m = 2000;
  int m_cap = 500000;
  EpsRule eps;
  CgOptions cg;
  int jobs = 1;
};

SweepTable run_tau_sweep(const Scenario& s, const TauSweepOptions& opts);

struct AverageOptions {
  std::vector<double> tau_list;
  SigmaRule sigma_rule = SigmaRule::one_over_tau;
  int n = 100;
  int m = 2000;
  int jobs = 1;
};

/// ||mean u - mean v||_{L2(0,T)} of uncontrolled solves per tau.
SweepTable run_average_convergence(const Scenario& s, const AverageOptions& opts);

/// ||v - xi_y||_{L2((0,T) x Omega)} per tau, where y solves the nonlocal
/// equation with b_eff = -b c / d and xi_y = -(c/d) mean(y). A fixed control
/// profile, constant in time, drives both solves.
SweepTable run_limit_check(const Scenario& s, const AverageOptions& opts,
                           const InitialData& control_profile);

/// Evaluates fn(0..count-1) on up to `jobs` threads; results keep index order.
template <typename Result, typename Fn>
std::vector<Result> ordered_map(int count, int jobs, Fn&& fn);

}  // namespace nullctl::experiments

#include "nullctl/detail/ordered_map.hpp"
