#include "nullctl/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace nullctl::experiments {

std::string format_number(double x) {
  if (std::isnan(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_trajectory_csv(std::ostream& os, const Trajectory<double>& traj, int last_step,
                          int stride) {
  stride = std::max(stride, 1);
  os << "t,x,u,v\n";
  const Field<double> x = traj.grid.nodes();
  auto emit = [&](int n) {
    const std::string t = format_number(traj.time.time(n));
    for (int i = 0; i < x.size(); ++i)
      os << t << ',' << format_number(x(i)) << ',' << format_number(traj.u(i, n)) << ','
         << format_number(traj.v(i, n)) << '\n';
  };
  for (int n = 0; n <= last_step; n += stride) emit(n);
  if (last_step % stride != 0) emit(last_step);
}

void write_summary_csv(std::ostream& os, const UncontrolledRun& run) {
  const auto& traj = run.trajectory;
  os << "t,u_norm,v_norm,flag\n";
  for (int n : {0, run.steps_completed}) {
    os << format_number(traj.time.time(n)) << ',' << format_number(l2_norm(traj.u.col(n), traj.grid))
       << ',' << format_number(l2_norm(traj.v.col(n), traj.grid)) << ','
       << (n > 0 && run.blew_up ? "blow_up" : "") << '\n';
  }
}

void write_control_csv(std::ostream& os, const ControlledRun& run) {
  const auto& s = run.solution;
  os << "dx,Nv,NyT,Inf_eps(F_eps),big_M,free_norm,NyT_unweighted,eps,cg_iterations,"
        "cg_residual,target_bound,cost_bound\n";
  os << format_number(s.trajectory.grid.h()) << ',' << format_number(s.cost) << ','
     << format_number(s.target_norm) << ',' << format_number(s.inf_F) << ','
     << format_number(s.big_m) << ',' << format_number(s.free_norm) << ','
     << format_number(s.target_norm_unweighted) << ',' << format_number(s.eps) << ','
     << s.cg_iterations << ',' << format_number(s.cg_residual) << ','
     << (run.target_bound_holds ? "ok" : "violated") << ','
     << (run.cost_bound_holds ? "ok" : "violated") << '\n';
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "tau,dx,N,M,Nv,NyT,Inf_eps(F_eps),big_M,free_norm,avg_diff,NyT_unweighted,limit_diff,"
        "cg_iterations,flag\n";
  for (const auto& r : rows) {
    os << format_number(r.tau) << ',' << format_number(r.dx) << ',' << r.n << ',' << r.m << ','
       << format_number(r.nv) << ',' << format_number(r.nyt) << ',' << format_number(r.inf_f)
       << ',' << format_number(r.big_m) << ',' << format_number(r.free_norm) << ','
       << format_number(r.avg_diff) << ',' << format_number(r.nyt_unweighted) << ','
       << format_number(r.limit_diff) << ',' << r.cg_iterations << ',' << r.flag << '\n';
  }
}

void write_fit_csv(std::ostream& os, const std::vector<std::pair<std::string, SlopeFit>>& fits) {
  os << "quantity,slope,intercept,points_used\n";
  for (const auto& [name, f] : fits)
    os << name << ',' << format_number(f.slope) << ',' << format_number(f.intercept) << ','
       << f.points_used << '\n';
}

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

void write_loglog_svg(std::ostream& os, const std::string& title, const std::string& x_label,
                      const std::vector<SvgSeries>& series) {
  constexpr double width = 640, height = 420, left = 70, right = 160, top = 40, bottom = 50;
  constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i) {
      if (!(s.xs[i] > 0 && s.ys[i] > 0)) continue;
      x_lo = std::min(x_lo, std::log10(s.xs[i]));
      x_hi = std::max(x_hi, std::log10(s.xs[i]));
      y_lo = std::min(y_lo, std::log10(s.ys[i]));
      y_hi = std::max(y_hi, std::log10(s.ys[i]));
    }
  if (!(x_lo <= x_hi)) x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  x_lo = std::floor(x_lo), x_hi = std::max(std::ceil(x_hi), x_lo + 1);
  y_lo = std::floor(y_lo), y_hi = std::max(std::ceil(y_hi), y_lo + 1);
  const double pw = width - left - right, ph = height - top - bottom;
  auto px = [&](double lx) { return left + (lx - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double ly) { return top + (y_hi - ly) / (y_hi - y_lo) * ph; };
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << escape(title) << "</text>\n";
  for (int d = static_cast<int>(x_lo); d <= static_cast<int>(x_hi); ++d)
    os << "<line x1=\"" << fmt(px(d)) << "\" y1=\"" << top << "\" x2=\"" << fmt(px(d))
       << "\" y2=\"" << top + ph << "\" stroke=\"#ddd\"/><text x=\"" << fmt(px(d))
       << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">1e" << d << "</text>\n";
  for (int d = static_cast<int>(y_lo); d <= static_cast<int>(y_hi); ++d)
    os << "<line x1=\"" << left << "\" y1=\"" << fmt(py(d)) << "\" x2=\"" << left + pw
       << "\" y2=\"" << fmt(py(d)) << "\" stroke=\"#ddd\"/><text x=\"" << left - 6 << "\" y=\""
       << fmt(py(d) + 4) << "\" text-anchor=\"end\">1e" << d << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12
     << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = colors[k % 5];
    std::string points;
    for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i) {
      if (!(s.xs[i] > 0 && s.ys[i] > 0)) continue;
      const double x = px(std::log10(s.xs[i])), y = py(std::log10(s.ys[i]));
      points += fmt(x) + "," + fmt(y) + " ";
      os << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"3\" fill=\"" << color
         << "\"/>\n";
    }
    os << "<polyline points=\"" << points << "\" fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\"/>\n";
    const double ly = top + 16 + 18 * static_cast<double>(k);
    os << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw + 32
       << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/><text x=\""
       << left + pw + 38 << "\" y=\"" << ly << "\">" << escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace nullctl::experiments
