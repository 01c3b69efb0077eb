#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace nullctl {

/// Nodal values on a Grid1D, boundary nodes included.
template <typename Scalar>
using Field = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Values sampled at the TimeMesh instants t_0..t_M.
template <typename Scalar>
using TimeSeries = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Uniform mesh of (0,1) with N interior nodes and spacing h = 1/(N+1).
/// Nodes are x_i = i*h for i = 0..N+1; both solution components live on
/// every node.
template <typename Scalar = double>
class Grid1D {
 public:
  explicit Grid1D(int n_interior) : n_interior_(n_interior) {
    if (n_interior < 1)
      throw std::invalid_argument("grid needs at least one interior node, got " +
                                  std::to_string(n_interior));
    h_ = Scalar(1) / Scalar(n_interior + 1);
  }

  int n_interior() const { return n_interior_; }
  int n_nodes() const { return n_interior_ + 2; }
  Scalar h() const { return h_; }

  Scalar node(int i) const {
    return i == n_interior_ + 1 ? Scalar(1) : Scalar(i) * h_;
  }

  Field<Scalar> nodes() const {
    Field<Scalar> x(n_nodes());
    for (int i = 0; i < n_nodes(); ++i) x(i) = node(i);
    return x;
  }

  /// Composite trapezoid weights: h/2 at the two boundary nodes, h inside.
  Field<Scalar> trapezoid_weights() const {
    Field<Scalar> w = Field<Scalar>::Constant(n_nodes(), h_);
    w(0) = w(n_nodes() - 1) = h_ / 2;
    return w;
  }

  /// Samples f(x) at every node.
  template <typename Fn>
  Field<Scalar> sample(Fn&& f) const {
    Field<Scalar> out(n_nodes());
    for (int i = 0; i < n_nodes(); ++i) out(i) = f(node(i));
    return out;
  }

  Field<Scalar> zeros() const { return Field<Scalar>::Zero(n_nodes()); }

  friend bool operator==(const Grid1D& a, const Grid1D& b) {
    return a.n_interior_ == b.n_interior_;
  }

 private:
  int n_interior_;
  Scalar h_;
};

/// Uniform partition t_n = n*dt of [0,T], dt = T/M.
template <typename Scalar = double>
class TimeMesh {
 public:
  TimeMesh(Scalar horizon, int m_steps) : horizon_(horizon), m_steps_(m_steps) {
    if (!(horizon > Scalar(0)))
      throw std::invalid_argument("time horizon must be positive");
    if (m_steps < 1)
      throw std::invalid_argument("time mesh needs at least one step, got " +
                                  std::to_string(m_steps));
    dt_ = horizon / Scalar(m_steps);
  }

  Scalar horizon() const { return horizon_; }
  int m_steps() const { return m_steps_; }
  Scalar dt() const { return dt_; }
  Scalar time(int n) const { return n == m_steps_ ? horizon_ : Scalar(n) * dt_; }

  TimeSeries<Scalar> times() const {
    TimeSeries<Scalar> t(m_steps_ + 1);
    for (int n = 0; n <= m_steps_; ++n) t(n) = time(n);
    return t;
  }

 private:
  Scalar horizon_;
  int m_steps_;
  Scalar dt_;
};

template <typename Scalar = double>
Grid1D<Scalar> make_grid(int n_interior) {
  return Grid1D<Scalar>(n_interior);
}

template <typename Scalar = double>
TimeMesh<Scalar> make_time_mesh(Scalar horizon, int m_steps) {
  return TimeMesh<Scalar>(horizon, m_steps);
}

namespace detail {

template <typename Derived, typename Scalar>
void require_aligned(const Eigen::MatrixBase<Derived>& f, const Grid1D<Scalar>& g) {
  if (f.size() != g.n_nodes())
    throw std::invalid_argument("field of length " + std::to_string(f.size()) +
                                " does not match grid with " +
                                std::to_string(g.n_nodes()) + " nodes");
}

}  // namespace detail

/// Trapezoid L2(0,1) inner product of two nodal fields.
template <typename DerivedA, typename DerivedB, typename Scalar>
Scalar inner_product(const Eigen::MatrixBase<DerivedA>& f,
                     const Eigen::MatrixBase<DerivedB>& g,
                     const Grid1D<Scalar>& grid) {
  detail::require_aligned(f, grid);
  detail::require_aligned(g, grid);
  const Eigen::Index last = f.size() - 1;
  Scalar s = (f(0) * g(0) + f(last) * g(last)) / 2;
  if (last > 1) s += f.segment(1, last - 1).dot(g.segment(1, last - 1));
  return grid.h() * s;
}

template <typename Derived, typename Scalar>
Scalar l2_norm(const Eigen::MatrixBase<Derived>& f, const Grid1D<Scalar>& g) {
  using std::sqrt;
  return sqrt(inner_product(f, f, g));
}

/// Spatial mean over Omega = (0,1), |Omega| = 1.
template <typename Derived, typename Scalar>
Scalar mean_value(const Eigen::MatrixBase<Derived>& f, const Grid1D<Scalar>& g) {
  detail::require_aligned(f, g);
  const Eigen::Index last = f.size() - 1;
  Scalar s = (f(0) + f(last)) / 2;
  if (last > 1) s += f.segment(1, last - 1).sum();
  return g.h() * s;
}

template <typename Derived, typename Scalar>
Scalar l2_norm_time(const Eigen::MatrixBase<Derived>& s, const TimeMesh<Scalar>& tm) {
  using std::sqrt;
  if (s.size() != tm.m_steps() + 1)
    throw std::invalid_argument("time series of length " + std::to_string(s.size()) +
                                " does not match " + std::to_string(tm.m_steps()) +
                                " time steps");
  const Eigen::Index last = s.size() - 1;
  Scalar acc = (s(0) * s(0) + s(last) * s(last)) / 2;
  if (last > 1) acc += s.segment(1, last - 1).squaredNorm();
  return sqrt(tm.dt() * acc);
}

/// 1 at nodes strictly inside (a,b), 0 elsewhere. Boundary nodes are never
/// included.
template <typename Scalar>
Field<Scalar> indicator(Scalar a, Scalar b, const Grid1D<Scalar>& g) {
  if (!(a < b)) throw std::invalid_argument("indicator interval needs a < b");
  if (a < Scalar(0) || b > Scalar(1))
    throw std::invalid_argument("indicator interval must lie in [0,1]");
  Field<Scalar> out = g.zeros();
  // nodes within rounding distance of an endpoint count as on the endpoint
  const Scalar tol = g.h() * Scalar(1e-9);
  for (int i = 1; i <= g.n_interior(); ++i) {
    const Scalar x = g.node(i);
    if (a + tol < x && x < b - tol) out(i) = Scalar(1);
  }
  return out;
}

}  // namespace nullctl
