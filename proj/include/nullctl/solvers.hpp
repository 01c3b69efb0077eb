#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "nullctl/errors.hpp"
#include "nullctl/mesh.hpp"
#include "nullctl/operators.hpp"
#include "nullctl/params.hpp"
#include "nullctl/tridiagonal.hpp"

namespace nullctl {

template <typename Scalar>
using Snapshots = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Solution norms above this are treated as a blow-up.
inline constexpr double kBlowUpThreshold = 1e12;

/// Snapshots of a two-component solution; column n holds time t_n.
template <typename Scalar = double>
struct Trajectory {
  Grid1D<Scalar> grid;
  TimeMesh<Scalar> time;
  Snapshots<Scalar> u;
  Snapshots<Scalar> v;

  Trajectory(Grid1D<Scalar> g, TimeMesh<Scalar> tm)
      : grid(g),
        time(tm),
        u(Snapshots<Scalar>::Zero(g.n_nodes(), tm.m_steps() + 1)),
        v(Snapshots<Scalar>::Zero(g.n_nodes(), tm.m_steps() + 1)) {}

  int m_steps() const { return time.m_steps(); }
  Field<Scalar> u_at(int n) const { return u.col(n); }
  Field<Scalar> v_at(int n) const { return v.col(n); }
};

/// Snapshots of a one-component solution (nonlocal and semilinear equations).
template <typename Scalar = double>
struct ScalarTrajectory {
  Grid1D<Scalar> grid;
  TimeMesh<Scalar> time;
  Snapshots<Scalar> y;

  ScalarTrajectory(Grid1D<Scalar> g, TimeMesh<Scalar> tm)
      : grid(g), time(tm), y(Snapshots<Scalar>::Zero(g.n_nodes(), tm.m_steps() + 1)) {}

  Field<Scalar> at(int n) const { return y.col(n); }
};

/// Distributed control h on omega x (0,T). Slice n (1 <= n <= M) acts on the
/// step from t_{n-1} to t_n.
template <typename Scalar = double>
class Control {
 public:
  Control(const Grid1D<Scalar>& g, const TimeMesh<Scalar>& tm)
      : slices_(Snapshots<Scalar>::Zero(g.n_nodes(), tm.m_steps())) {}

  int m_steps() const { return static_cast<int>(slices_.cols()); }
  int n_nodes() const { return static_cast<int>(slices_.rows()); }

  auto slice(int n) { return slices_.col(n - 1); }
  auto slice(int n) const { return slices_.col(n - 1); }

  const Snapshots<Scalar>& matrix() const { return slices_; }
  Snapshots<Scalar>& matrix() { return slices_; }

  /// Zeroes every value outside the support of mask.
  void restrict_to(const Field<Scalar>& mask) {
    slices_.array().colwise() *= mask.array();
  }

 private:
  Snapshots<Scalar> slices_;
};

/// Discretized linear coupled system with cached factorizations of the
/// forward step matrix and its transpose (b and c swapped).
template <typename Scalar = double>
class CoupledSystem {
 public:
  CoupledSystem(SystemParams<Scalar> p, Grid1D<Scalar> g, TimeMesh<Scalar> tm)
      : params_(p),
        grid_(g),
        time_(tm),
        mask_(indicator(p.omega_lo, p.omega_hi, g)),
        forward_(assemble_step_matrix(p, tm.dt(), g)),
        backward_(assemble_step_matrix(p.transposed(), tm.dt(), g)) {}

  const SystemParams<Scalar>& params() const { return params_; }
  const Grid1D<Scalar>& grid() const { return grid_; }
  const TimeMesh<Scalar>& time() const { return time_; }
  /// Indicator of the control window on the grid nodes.
  const Field<Scalar>& mask() const { return mask_; }
  const BlockThomas<Scalar>& forward_factor() const { return forward_; }
  const BlockThomas<Scalar>& backward_factor() const { return backward_; }

 private:
  SystemParams<Scalar> params_;
  Grid1D<Scalar> grid_;
  TimeMesh<Scalar> time_;
  Field<Scalar> mask_;
  BlockThomas<Scalar> forward_;
  BlockThomas<Scalar> backward_;
};

namespace detail {

template <typename Scalar>
void pin_dirichlet(Eigen::Ref<Field<Scalar>> u) {
  u(0) = Scalar(0);
  u(u.size() - 1) = Scalar(0);
}

template <typename Scalar>
void check_growth(const Field<Scalar>& u, const Field<Scalar>& v, const Grid1D<Scalar>& g,
                  int step) {
  using std::isfinite;
  const Scalar size = l2_norm(u, g) + l2_norm(v, g);
  if (!isfinite(size) || size > Scalar(kBlowUpThreshold))
    throw SolverError(SolverFailure::blow_up,
                      "solution norm exceeded threshold at step " + std::to_string(step));
}

/// In-place implicit step: (u, v) <- B^{-1} (u + dt slice 1_omega, tau v).
template <typename Scalar>
void forward_step(const CoupledSystem<Scalar>& sys, Field<Scalar>& u, Field<Scalar>& v,
                  const Field<Scalar>* slice) {
  if (slice) u.array() += sys.time().dt() * slice->array() * sys.mask().array();
  pin_dirichlet<Scalar>(u);
  v *= sys.params().tau;
  sys.forward_factor().solve_in_place(u, v);
}

/// In-place backward step: (phi, psi) <- B~^{-1} (phi, tau psi).
template <typename Scalar>
void backward_step(const CoupledSystem<Scalar>& sys, Field<Scalar>& phi, Field<Scalar>& psi) {
  pin_dirichlet<Scalar>(phi);
  psi *= sys.params().tau;
  sys.backward_factor().solve_in_place(phi, psi);
}

}  // namespace detail

/// One implicit Euler step of the coupled system. The control slice is
/// restricted to omega before it enters the right-hand side.
template <typename Scalar>
std::pair<Field<Scalar>, Field<Scalar>> step_coupled(const CoupledSystem<Scalar>& sys,
                                                     Field<Scalar> u, Field<Scalar> v,
                                                     const Field<Scalar>& control_slice) {
  detail::require_aligned(u, sys.grid());
  detail::require_aligned(v, sys.grid());
  detail::require_aligned(control_slice, sys.grid());
  detail::forward_step(sys, u, v, &control_slice);
  return {std::move(u), std::move(v)};
}

/// Terminal state of the forward system without storing the trajectory.
template <typename Scalar>
std::pair<Field<Scalar>, Field<Scalar>> terminal_state(const CoupledSystem<Scalar>& sys,
                                                       Field<Scalar> u, Field<Scalar> v,
                                                       const Control<Scalar>* h = nullptr,
                                                       bool detect_blow_up = false) {
  detail::require_aligned(u, sys.grid());
  detail::require_aligned(v, sys.grid());
  detail::pin_dirichlet<Scalar>(u);
  const int m = sys.time().m_steps();
  Field<Scalar> slice;
  for (int n = 1; n <= m; ++n) {
    if (h) {
      slice = h->slice(n);
      detail::forward_step(sys, u, v, &slice);
    } else {
      detail::forward_step<Scalar>(sys, u, v, nullptr);
    }
    if (detect_blow_up) detail::check_growth(u, v, sys.grid(), n);
  }
  return {std::move(u), std::move(v)};
}

/// Full forward trajectory. Slice n of the control drives the step
/// t_{n-1} -> t_n. Throws SolverError(blow_up) once the state norm passes
/// kBlowUpThreshold.
template <typename Scalar>
Trajectory<Scalar> solve_forward(const CoupledSystem<Scalar>& sys, const Field<Scalar>& u0,
                                 const Field<Scalar>& v0, const Control<Scalar>* h = nullptr) {
  detail::require_aligned(u0, sys.grid());
  detail::require_aligned(v0, sys.grid());
  if (h && (h->m_steps() != sys.time().m_steps() || h->n_nodes() != sys.grid().n_nodes()))
    throw std::invalid_argument("control does not match the space-time mesh");

  Trajectory<Scalar> traj(sys.grid(), sys.time());
  Field<Scalar> u = u0, v = v0, slice;
  detail::pin_dirichlet<Scalar>(u);
  traj.u.col(0) = u;
  traj.v.col(0) = v;
  for (int n = 1; n <= sys.time().m_steps(); ++n) {
    if (h) {
      slice = h->slice(n);
      detail::forward_step(sys, u, v, &slice);
    } else {
      detail::forward_step<Scalar>(sys, u, v, nullptr);
    }
    detail::check_growth(u, v, sys.grid(), n);
    traj.u.col(n) = u;
    traj.v.col(n) = v;
  }
  return traj;
}

template <typename Scalar>
Trajectory<Scalar> solve_forward(const CoupledSystem<Scalar>& sys, const Field<Scalar>& u0,
                                 const Field<Scalar>& v0, const Control<Scalar>& h) {
  return solve_forward(sys, u0, v0, &h);
}

/// Backward implicit Euler for the adjoint system
///
///   -phi_t - phi_xx = a phi + c psi,   -tau psi_t - sigma psi_xx = b phi + d psi,
///
/// from (phi, psi)(T) = (phiT, psiT). The recursion is the exact transpose of
/// the forward step in the tau-weighted trapezoid product, so the discrete
/// control-to-state map and the observation map below are adjoint to round-off.
template <typename Scalar>
Trajectory<Scalar> solve_adjoint(const CoupledSystem<Scalar>& sys, const Field<Scalar>& phiT,
                                 const Field<Scalar>& psiT) {
  detail::require_aligned(phiT, sys.grid());
  detail::require_aligned(psiT, sys.grid());
  const int m = sys.time().m_steps();
  Trajectory<Scalar> traj(sys.grid(), sys.time());
  Field<Scalar> phi = phiT, psi = psiT;
  detail::pin_dirichlet<Scalar>(phi);
  traj.u.col(m) = phi;
  traj.v.col(m) = psi;
  for (int n = m - 1; n >= 0; --n) {
    detail::backward_step(sys, phi, psi);
    traj.u.col(n) = phi;
    traj.v.col(n) = psi;
  }
  return traj;
}

/// Control read off an adjoint trajectory: slice n+1 is phi(t_n) on omega.
template <typename Scalar>
Control<Scalar> observe(const CoupledSystem<Scalar>& sys, const Trajectory<Scalar>& adjoint) {
  Control<Scalar> h(sys.grid(), sys.time());
  h.matrix() = adjoint.u.leftCols(sys.time().m_steps());
  h.restrict_to(sys.mask());
  return h;
}

/// Same as observe(solve_adjoint(...)) without keeping psi.
template <typename Scalar>
Control<Scalar> adjoint_observation(const CoupledSystem<Scalar>& sys, Field<Scalar> phi,
                                    Field<Scalar> psi) {
  detail::require_aligned(phi, sys.grid());
  detail::require_aligned(psi, sys.grid());
  const int m = sys.time().m_steps();
  Control<Scalar> h(sys.grid(), sys.time());
  detail::pin_dirichlet<Scalar>(phi);
  for (int n = m - 1; n >= 0; --n) {
    detail::backward_step(sys, phi, psi);
    h.slice(n + 1) = phi;
  }
  h.restrict_to(sys.mask());
  return h;
}

/// Smallest M with |d| (T/M) / tau^2 <= h^2; 1 when d = 0.
template <typename Scalar>
int stable_time_steps(const SystemParams<Scalar>& p, const Grid1D<Scalar>& g, Scalar horizon) {
  using std::abs;
  using std::ceil;
  if (!(p.tau > Scalar(0))) throw std::invalid_argument("tau must be positive");
  if (!(horizon > Scalar(0))) throw std::invalid_argument("time horizon must be positive");
  if (p.d == Scalar(0)) return 1;
  const Scalar bound = abs(p.d) * horizon / (p.tau * p.tau * g.h() * g.h());
  // relative slack absorbs rounding in bound when it is an exact integer
  const Scalar steps = ceil(bound * (1 - 64 * std::numeric_limits<Scalar>::epsilon()));
  if (steps > Scalar(std::numeric_limits<int>::max()))
    throw std::invalid_argument("stability bound needs more time steps than representable");
  return steps < 1 ? 1 : static_cast<int>(steps);
}

/// Spatial means (mean u(t_n), mean v(t_n)), n = 0..M.
template <typename Scalar>
std::pair<TimeSeries<Scalar>, TimeSeries<Scalar>> average_series(const Trajectory<Scalar>& traj) {
  const int m = traj.time.m_steps();
  TimeSeries<Scalar> mu(m + 1), mv(m + 1);
  for (int n = 0; n <= m; ++n) {
    mu(n) = mean_value(traj.u.col(n), traj.grid);
    mv(n) = mean_value(traj.v.col(n), traj.grid);
  }
  return {std::move(mu), std::move(mv)};
}

/// Linear nonlocal heat equation
///
///   y_t - y_xx = a y + b mean(y) + h 1_omega,   y = 0 on the boundary,
///
/// by implicit Euler. The rank-one mean term is folded into the tridiagonal
/// solve with a Sherman-Morrison correction.
template <typename Scalar>
ScalarTrajectory<Scalar> solve_nonlocal_linear(Scalar a, Scalar b, const Field<Scalar>& y0,
                                               const Control<Scalar>& h,
                                               const TimeMesh<Scalar>& tm,
                                               const Grid1D<Scalar>& g) {
  using std::abs;
  detail::require_aligned(y0, g);
  if (h.m_steps() != tm.m_steps() || h.n_nodes() != g.n_nodes())
    throw std::invalid_argument("control does not match the space-time mesh");

  const Scalar dt = tm.dt();
  const Tridiagonal<Scalar> local = dirichlet_step_matrix(a, dt, g);
  const Field<Scalar> weights = g.trapezoid_weights();
  Field<Scalar> interior = Field<Scalar>::Ones(g.n_nodes());
  detail::pin_dirichlet<Scalar>(interior);
  const Field<Scalar> z = local.solve(interior);
  const Scalar denom = 1 - dt * b * weights.dot(z);
  if (abs(denom) <= 64 * std::numeric_limits<Scalar>::epsilon())
    throw SolverError(SolverFailure::rank_one_breakdown,
                      "nonlocal correction denominator vanished");

  ScalarTrajectory<Scalar> traj(g, tm);
  Field<Scalar> y = y0;
  detail::pin_dirichlet<Scalar>(y);
  traj.y.col(0) = y;
  for (int n = 1; n <= tm.m_steps(); ++n) {
    y += dt * h.slice(n);
    detail::pin_dirichlet<Scalar>(y);
    local.solve_in_place(y);
    y += (dt * b * weights.dot(y) / denom) * z;
    traj.y.col(n) = y;
  }
  return traj;
}

/// f(u, m) = a u + b m + g1(u, m) u^2 + g2(u) u m, where m stands for the
/// spatial mean. g1 and g2 are expected bounded and Lipschitz.
template <typename Scalar = double>
struct NonlinearitySpec {
  Scalar a = 0;
  Scalar b = 0;
  std::function<Scalar(Scalar, Scalar)> g1;
  std::function<Scalar(Scalar)> g2;

  Scalar operator()(Scalar u, Scalar m) const {
    Scalar out = a * u + b * m;
    if (g1) out += g1(u, m) * u * u;
    if (g2) out += g2(u) * u * m;
    return out;
  }
};

template <typename Scalar = double>
NonlinearitySpec<Scalar> linear_nonlinearity(Scalar a, Scalar b) {
  return {a, b, {}, {}};
}

/// Smooth cutoff vanishing on |s| <= lo, equal to 1 on [hi, cap], and
/// vanishing again beyond 2 cap. Compactly supported, zero near 0.
template <typename Scalar = double>
std::function<Scalar(Scalar)> smooth_cutoff(Scalar lo, Scalar hi, Scalar cap) {
  auto step = [](Scalar s) {
    using std::exp;
    if (s <= 0) return Scalar(0);
    if (s >= 1) return Scalar(1);
    const Scalar e1 = exp(-1 / s), e2 = exp(-1 / (1 - s));
    return e1 / (e1 + e2);
  };
  return [=](Scalar s) {
    using std::abs;
    const Scalar r = abs(s);
    return step((r - lo) / (hi - lo)) * (1 - step((r - cap) / cap));
  };
}

/// Adaptive-evolution nonlinearity f(y, m) = chi(y) y (B - m), written in the
/// a u + b m + g1 u^2 + g2 u m form with a = b = 0.
template <typename Scalar = double>
NonlinearitySpec<Scalar> adaptive_evolution(Scalar birth_rate,
                                            std::function<Scalar(Scalar)> chi) {
  NonlinearitySpec<Scalar> f;
  f.g1 = [=](Scalar u, Scalar) { return u == Scalar(0) ? Scalar(0) : birth_rate * chi(u) / u; };
  f.g2 = [=](Scalar u) { return -chi(u); };
  return f;
}

/// Semilinear nonlocal heat equation y_t - y_xx = f(y, mean(y)) + h 1_omega,
/// diffusion implicit and f taken at the previous time level.
template <typename Scalar>
ScalarTrajectory<Scalar> solve_semilinear_nonlocal(const NonlinearitySpec<Scalar>& f,
                                                   const Field<Scalar>& y0,
                                                   const Control<Scalar>& h,
                                                   const TimeMesh<Scalar>& tm,
                                                   const Grid1D<Scalar>& g) {
  using std::abs;
  using std::isfinite;
  detail::require_aligned(y0, g);
  if (h.m_steps() != tm.m_steps() || h.n_nodes() != g.n_nodes())
    throw std::invalid_argument("control does not match the space-time mesh");
  if (abs(f(Scalar(0), Scalar(0))) > Scalar(0))
    throw std::invalid_argument("nonlinearity must vanish at the origin");

  const Scalar dt = tm.dt();
  const Tridiagonal<Scalar> heat = dirichlet_step_matrix(Scalar(0), dt, g);
  ScalarTrajectory<Scalar> traj(g, tm);
  Field<Scalar> y = y0, rhs(g.n_nodes());
  detail::pin_dirichlet<Scalar>(y);
  traj.y.col(0) = y;
  for (int n = 1; n <= tm.m_steps(); ++n) {
    const Scalar m = mean_value(y, g);
    for (int i = 0; i < g.n_nodes(); ++i) rhs(i) = y(i) + dt * f(y(i), m);
    rhs += dt * h.slice(n);
    detail::pin_dirichlet<Scalar>(rhs);
    heat.solve_in_place(rhs);
    y.swap(rhs);
    const Scalar size = l2_norm(y, g);
    if (!isfinite(size) || size > Scalar(kBlowUpThreshold))
      throw SolverError(SolverFailure::blow_up,
                        "solution norm exceeded threshold at step " + std::to_string(n));
    traj.y.col(n) = y;
  }
  return traj;
}

}  // namespace nullctl
