#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "nullctl/errors.hpp"
#include "nullctl/mesh.hpp"
#include "nullctl/solvers.hpp"

namespace nullctl {

/// Terminal data (phi_T, psi_T) of the adjoint system. phi_T vanishes on the
/// boundary.
template <typename Scalar = double>
struct DualVector {
  Field<Scalar> phiT;
  Field<Scalar> psiT;

  static DualVector zero(const Grid1D<Scalar>& g) { return {g.zeros(), g.zeros()}; }

  /// [phi_T; psi_T] as one vector.
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> stacked() const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(phiT.size() + psiT.size());
    out << phiT, psiT;
    return out;
  }

  static DualVector from_stacked(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x) {
    const Eigen::Index n = x.size() / 2;
    return {x.head(n), x.tail(n)};
  }
};

/// <x, y>_tau = int phi phi' + tau int psi psi'.
template <typename Scalar>
Scalar weighted_inner(const DualVector<Scalar>& x, const DualVector<Scalar>& y, Scalar tau,
                      const Grid1D<Scalar>& g) {
  return inner_product(x.phiT, y.phiT, g) + tau * inner_product(x.psiT, y.psiT, g);
}

/// (||u||^2 + tau ||v||^2)^{1/2}.
template <typename Scalar>
Scalar weighted_norm(const Field<Scalar>& u, const Field<Scalar>& v, Scalar tau,
                     const Grid1D<Scalar>& g) {
  using std::sqrt;
  return sqrt(inner_product(u, u, g) + tau * inner_product(v, v, g));
}

struct CgOptions {
  double rel_tol = 1e-8;
  int max_iter = 500;

  void validate() const {
    if (!(rel_tol > 0.0 && rel_tol < 1.0))
      throw std::invalid_argument("CG relative tolerance must lie in (0,1)");
    if (max_iter < 1) throw std::invalid_argument("CG iteration cap must be at least 1");
  }
};

template <typename Scalar = double>
struct CgResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> solution;
  int iterations = 0;
  Scalar relative_residual = 0;
  bool converged = false;
  /// Relative residual after each iteration, starting with the initial guess.
  std::vector<Scalar> residual_history;
  /// Quadratic objective 1/2 <A x, x> - <b, x> after each iteration.
  std::vector<Scalar> objective_history;
};

/// Conjugate gradient for A x = b with A self-adjoint positive definite in the
/// inner product <x, y> = sum_i weights_i x_i y_i. Zero initial guess.
template <typename Scalar, typename Operator>
CgResult<Scalar> conjugate_gradient(Operator&& apply,
                                    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
                                    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& weights,
                                    const CgOptions& opts) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using std::sqrt;
  opts.validate();
  auto dot = [&](const Vector& x, const Vector& y) { return x.cwiseProduct(weights).dot(y); };

  CgResult<Scalar> out;
  out.solution = Vector::Zero(b.size());
  const Scalar b_norm = sqrt(dot(b, b));
  out.residual_history.push_back(b_norm > 0 ? Scalar(1) : Scalar(0));
  out.objective_history.push_back(Scalar(0));
  if (b_norm == Scalar(0)) {
    out.converged = true;
    return out;
  }

  Vector r = b, dir = b, a_dir(b.size());
  Scalar rr = dot(r, r);
  for (int k = 1; k <= opts.max_iter; ++k) {
    a_dir = apply(dir);
    const Scalar curvature = dot(dir, a_dir);
    if (!(curvature > Scalar(0))) break;
    const Scalar alpha = rr / curvature;
    out.solution += alpha * dir;
    r -= alpha * a_dir;
    const Scalar rr_next = dot(r, r);
    out.iterations = k;
    out.relative_residual = sqrt(rr_next) / b_norm;
    out.residual_history.push_back(out.relative_residual);
    out.objective_history.push_back(-dot(out.solution, b + r) / 2);
    if (out.relative_residual <= Scalar(opts.rel_tol)) {
      out.converged = true;
      break;
    }
    dir = r + (rr_next / rr) * dir;
    rr = rr_next;
  }
  return out;
}

/// Terminal state (u(T), v(T)) of the uncontrolled system.
template <typename Scalar>
DualVector<Scalar> free_terminal(const CoupledSystem<Scalar>& sys, const Field<Scalar>& u0,
                                 const Field<Scalar>& v0) {
  auto [u, v] = terminal_state<Scalar>(sys, u0, v0, nullptr, true);
  return {std::move(u), std::move(v)};
}

/// Gramian Lambda x = (w(T), z(T)): run the adjoint from x, feed phi on omega
/// as the source of the forward system started from zero. Self-adjoint and
/// positive semidefinite in <.,.>_tau, with
/// <Lambda x, x>_tau = control_norm(observe(adjoint(x)))^2.
template <typename Scalar>
DualVector<Scalar> apply_gramian(const CoupledSystem<Scalar>& sys, const DualVector<Scalar>& x) {
  const Control<Scalar> source = adjoint_observation<Scalar>(sys, x.phiT, x.psiT);
  auto [w, z] = terminal_state<Scalar>(sys, sys.grid().zeros(), sys.grid().zeros(), &source);
  return {std::move(w), std::move(z)};
}

/// Discrete L2(omega x (0,T)) norm: dt * sum over slices of the trapezoid norm.
template <typename Scalar>
Scalar control_norm(const Control<Scalar>& h, const CoupledSystem<Scalar>& sys) {
  using std::sqrt;
  Scalar acc = 0;
  for (int n = 1; n <= h.m_steps(); ++n)
    acc += inner_product(h.slice(n), h.slice(n), sys.grid());
  return sqrt(sys.time().dt() * acc);
}

template <typename Scalar = double>
struct HumSolution {
  Control<Scalar> control;
  /// Controlled forward trajectory.
  Trajectory<Scalar> trajectory;
  /// Minimizer (phi_T, psi_T) of the dual functional.
  DualVector<Scalar> dual;
  /// Uncontrolled terminal state.
  DualVector<Scalar> free;
  Scalar eps = 0;
  Scalar cost = 0;
  /// (||u(T)||^2 + tau ||v(T)||^2)^{1/2}
  Scalar target_norm = 0;
  /// (||u(T)||^2 + ||v(T)||^2)^{1/2}
  Scalar target_norm_unweighted = 0;
  Scalar free_norm = 0;
  Scalar inf_F = 0;
  Scalar big_m = 0;
  int cg_iterations = 0;
  Scalar cg_residual = 0;
  std::vector<Scalar> cg_residual_history;
  std::vector<Scalar> cg_objective_history;
};

/// M = sqrt(2 inf F_eps).
template <typename Scalar>
Scalar hum_constant(Scalar inf_F) {
  using std::sqrt;
  if (inf_F < Scalar(0)) throw std::invalid_argument("inf F_eps must be nonnegative");
  return sqrt(2 * inf_F);
}

/// F_eps(h) = 1/2 ||h||^2 + 1/(2 eps) (||u(T)||^2 + tau ||v(T)||^2), evaluated
/// on the stored control and controlled trajectory.
template <typename Scalar>
Scalar evaluate_primal(const HumSolution<Scalar>& sol, Scalar eps, Scalar tau) {
  const int m = sol.trajectory.m_steps();
  const Scalar target = weighted_norm<Scalar>(sol.trajectory.u.col(m), sol.trajectory.v.col(m),
                                              tau, sol.trajectory.grid);
  return sol.cost * sol.cost / 2 + target * target / (2 * eps);
}

/// Optimal value predicted by duality: -1/2 <dual, free terminal state>_tau.
template <typename Scalar>
Scalar fenchel_value(const HumSolution<Scalar>& sol, Scalar tau) {
  return -weighted_inner(sol.dual, sol.free, tau, sol.trajectory.grid) / 2;
}

/// Penalized HUM: solve (Lambda + eps I) p = -(u_free(T), v_free(T)) by CG in
/// <.,.>_tau, then h = phi|_omega from the adjoint started at p. At the
/// solution (u(T), v(T)) = -eps p up to the CG tolerance.
template <typename Scalar>
HumSolution<Scalar> solve_penalized_hum(const CoupledSystem<Scalar>& sys,
                                        const Field<Scalar>& u0, const Field<Scalar>& v0,
                                        Scalar eps, const CgOptions& opts = {}) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (!(eps > Scalar(0))) throw std::invalid_argument("penalization eps must be positive");
  if (sys.params().c == Scalar(0))
    throw std::invalid_argument("coupling c = 0 makes the second component uncontrollable");
  opts.validate();

  const Grid1D<Scalar>& g = sys.grid();
  const Scalar tau = sys.params().tau;
  const DualVector<Scalar> free = free_terminal(sys, u0, v0);

  Vector weights(2 * g.n_nodes());
  weights << g.trapezoid_weights(), tau * g.trapezoid_weights();
  const Vector rhs = -free.stacked();
  auto op = [&](const Vector& x) -> Vector {
    return apply_gramian(sys, DualVector<Scalar>::from_stacked(x)).stacked() + eps * x;
  };
  CgResult<Scalar> cg = conjugate_gradient<Scalar>(op, rhs, weights, opts);
  if (!cg.converged)
    throw SolverError(SolverFailure::cg_no_convergence,
                      "relative residual " + std::to_string(double(cg.relative_residual)) +
                          " after " + std::to_string(cg.iterations) + " iterations");

  DualVector<Scalar> dual = DualVector<Scalar>::from_stacked(cg.solution);
  Control<Scalar> control = observe(sys, solve_adjoint(sys, dual.phiT, dual.psiT));
  Trajectory<Scalar> traj = solve_forward(sys, u0, v0, &control);

  const int m = sys.time().m_steps();
  HumSolution<Scalar> sol{std::move(control), std::move(traj), std::move(dual), free};
  sol.eps = eps;
  sol.cost = control_norm(sol.control, sys);
  sol.target_norm = weighted_norm<Scalar>(sol.trajectory.u.col(m), sol.trajectory.v.col(m), tau, g);
  sol.target_norm_unweighted =
      weighted_norm<Scalar>(sol.trajectory.u.col(m), sol.trajectory.v.col(m), Scalar(1), g);
  sol.free_norm = weighted_norm<Scalar>(free.phiT, free.psiT, tau, g);
  sol.inf_F = evaluate_primal(sol, eps, tau);
  sol.big_m = hum_constant(sol.inf_F);
  sol.cg_iterations = cg.iterations;
  sol.cg_residual = cg.relative_residual;
  sol.cg_residual_history = std::move(cg.residual_history);
  sol.cg_objective_history = std::move(cg.objective_history);
  return sol;
}

}  // namespace nullctl
