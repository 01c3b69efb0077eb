#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "nullctl/experiments.hpp"

namespace nullctl::experiments {

/// %.17g, or the empty string for NaN.
std::string format_number(double x);

/// Columns t,x,u,v for time indices 0, stride, 2 stride, ..., up to and
/// including `last_step`.
void write_trajectory_csv(std::ostream& os, const Trajectory<double>& traj, int last_step,
                          int stride = 1);

/// Columns t,u_norm,v_norm at the first and last completed step.
void write_summary_csv(std::ostream& os, const UncontrolledRun& run);

/// Diagnostics row of one penalized HUM solve.
void write_control_csv(std::ostream& os, const ControlledRun& run);

/// Sweep table with a fixed header; unused columns are blank.
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

void write_fit_csv(std::ostream& os, const std::vector<std::pair<std::string, SlopeFit>>& fits);

struct SvgSeries {
  std::string name;
  std::vector<double> xs;
  std::vector<double> ys;
};

/// Log-log line chart; nonpositive points are skipped.
void write_loglog_svg(std::ostream& os, const std::string& title, const std::string& x_label,
                      const std::vector<SvgSeries>& series);

}  // namespace nullctl::experiments
