#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "nullctl/errors.hpp"
#include "nullctl/mesh.hpp"
#include "nullctl/params.hpp"

namespace nullctl {

enum class BoundaryKind { dirichlet, neumann };

/// Three-point second difference 1/h^2 (f_{i-1} - 2 f_i + f_{i+1}).
///
/// Dirichlet: boundary rows return 0 (the value there is pinned).
/// Neumann: mirrored ghost node, so the row at x_0 reads 2 (f_1 - f_0) / h^2.
/// Both are symmetric with respect to the trapezoid inner product.
template <typename Scalar = double>
class LinearStencil {
 public:
  LinearStencil(BoundaryKind kind, Grid1D<Scalar> grid) : kind_(kind), grid_(grid) {}

  BoundaryKind kind() const { return kind_; }
  const Grid1D<Scalar>& grid() const { return grid_; }

  template <typename Derived>
  Field<Scalar> apply(const Eigen::MatrixBase<Derived>& f) const {
    detail::require_aligned(f, grid_);
    const int last = grid_.n_nodes() - 1;
    const Scalar inv_h2 = Scalar(1) / (grid_.h() * grid_.h());
    Field<Scalar> out(grid_.n_nodes());
    for (int i = 1; i < last; ++i) out(i) = (f(i - 1) - 2 * f(i) + f(i + 1)) * inv_h2;
    if (kind_ == BoundaryKind::dirichlet) {
      out(0) = out(last) = Scalar(0);
    } else {
      out(0) = 2 * (f(1) - f(0)) * inv_h2;
      out(last) = 2 * (f(last - 1) - f(last)) * inv_h2;
    }
    return out;
  }

  template <typename Derived>
  Field<Scalar> operator*(const Eigen::MatrixBase<Derived>& f) const {
    return apply(f);
  }

 private:
  BoundaryKind kind_;
  Grid1D<Scalar> grid_;
};

template <typename Scalar = double>
LinearStencil<Scalar> laplacian_dirichlet(const Grid1D<Scalar>& g) {
  return LinearStencil<Scalar>(BoundaryKind::dirichlet, g);
}

template <typename Scalar = double>
LinearStencil<Scalar> laplacian_neumann(const Grid1D<Scalar>& g) {
  return LinearStencil<Scalar>(BoundaryKind::neumann, g);
}

/// Block tridiagonal matrix with 2x2 blocks, one block row per node. The
/// unknown at node i is (u_i, v_i).
template <typename Scalar = double>
class BlockStepMatrix {
 public:
  using Block = Eigen::Matrix<Scalar, 2, 2>;

  BlockStepMatrix(std::vector<Block> lower, std::vector<Block> diag,
                  std::vector<Block> upper)
      : lower_(std::move(lower)), diag_(std::move(diag)), upper_(std::move(upper)) {
    if (diag_.empty() || lower_.size() != diag_.size() || upper_.size() != diag_.size())
      throw std::invalid_argument("block rows of inconsistent length");
  }

  int n_nodes() const { return static_cast<int>(diag_.size()); }

  /// Block coupling row i to node i-1 (unused for i = 0).
  const Block& lower(int i) const { return lower_[i]; }
  const Block& diag(int i) const { return diag_[i]; }
  /// Block coupling row i to node i+1 (unused for the last row).
  const Block& upper(int i) const { return upper_[i]; }

  /// Matrix-vector product.
  std::pair<Field<Scalar>, Field<Scalar>> apply(const Field<Scalar>& u,
                                                const Field<Scalar>& v) const {
    const int n = n_nodes();
    if (u.size() != n || v.size() != n)
      throw std::invalid_argument("operand length does not match block matrix");
    Field<Scalar> ou(n), ov(n);
    for (int i = 0; i < n; ++i) {
      Eigen::Matrix<Scalar, 2, 1> acc = diag_[i] * Eigen::Matrix<Scalar, 2, 1>(u(i), v(i));
      if (i > 0) acc += lower_[i] * Eigen::Matrix<Scalar, 2, 1>(u(i - 1), v(i - 1));
      if (i + 1 < n) acc += upper_[i] * Eigen::Matrix<Scalar, 2, 1>(u(i + 1), v(i + 1));
      ou(i) = acc(0);
      ov(i) = acc(1);
    }
    return {std::move(ou), std::move(ov)};
  }

 private:
  std::vector<Block> lower_, diag_, upper_;
};

/// Implicit Euler matrix of the coupled system for one step of size dt:
///
///   (1 - dt a) u_i - dt (D_D u)_i - dt b v_i                = rhs_u
///   -dt c u_i + (tau - dt d) v_i - dt sigma (D_N v)_i       = rhs_v
///
/// with identity rows for u at the two boundary nodes.
template <typename Scalar>
BlockStepMatrix<Scalar> assemble_step_matrix(const SystemParams<Scalar>& p, Scalar dt,
                                             const Grid1D<Scalar>& g) {
  using Block = typename BlockStepMatrix<Scalar>::Block;
  p.validate();
  if (!(dt > Scalar(0))) throw std::invalid_argument("time step must be positive");

  const int n = g.n_nodes();
  const Scalar k = dt / (g.h() * g.h());
  std::vector<Block> lower(n, Block::Zero()), diag(n), upper(n, Block::Zero());

  Block interior;
  interior << 1 - dt * p.a + 2 * k, -dt * p.b,
              -dt * p.c, p.tau - dt * p.d + 2 * k * p.sigma;
  Block boundary;
  boundary << 1, 0,
              -dt * p.c, p.tau - dt * p.d + 2 * k * p.sigma;

  const Block neighbour = Eigen::Matrix<Scalar, 2, 1>(-k, -k * p.sigma).asDiagonal();
  for (int i = 1; i + 1 < n; ++i) {
    diag[i] = interior;
    lower[i] = neighbour;
    upper[i] = neighbour;
  }
  // Dirichlet rows for u carry no neighbours; v uses the mirrored ghost node.
  diag[0] = diag[n - 1] = boundary;
  upper[0](1, 1) = -2 * k * p.sigma;
  lower[n - 1](1, 1) = -2 * k * p.sigma;
  return BlockStepMatrix<Scalar>(std::move(lower), std::move(diag), std::move(upper));
}

/// Block-Thomas LU factorization with 2x2 pivots. Factor once, solve many.
/// Coefficients are kept as flat arrays, four entries per node, row-major.
template <typename Scalar = double>
class BlockThomas {
 public:
  using Block = typename BlockStepMatrix<Scalar>::Block;

  explicit BlockThomas(const BlockStepMatrix<Scalar>& m)
      : n_(m.n_nodes()), multiplier_(4 * n_, Scalar(0)), pivot_inv_(4 * n_), coupling_(4 * n_) {
    const Scalar tiny = 64 * std::numeric_limits<Scalar>::epsilon();
    Block prev_inv = Block::Zero();
    for (int i = 0; i < n_; ++i) {
      Block pivot = m.diag(i);
      if (i > 0) {
        const Block mult = m.lower(i) * prev_inv;
        pivot -= mult * m.upper(i - 1);
        store(multiplier_, i, mult);
      }
      using std::abs;
      const Scalar scale = pivot.cwiseAbs().maxCoeff();
      if (!(scale > Scalar(0)) || abs(pivot.determinant()) <= tiny * scale * scale)
        throw SingularPivotError(i);
      prev_inv = pivot.inverse();
      store(pivot_inv_, i, prev_inv);
      // x_i = P_i^{-1} y_i - (P_i^{-1} U_i) x_{i+1}
      store(coupling_, i, Block(prev_inv * m.upper(i)));
    }
  }

  int n_nodes() const { return n_; }

  /// Overwrites (u, v) with the solution for right-hand side (u, v).
  void solve_in_place(Eigen::Ref<Field<Scalar>> u, Eigen::Ref<Field<Scalar>> v) const {
    if (u.size() != n_ || v.size() != n_)
      throw std::invalid_argument("right-hand side length does not match block matrix");
    Scalar* pu = u.data();
    Scalar* pv = v.data();
    const Scalar* l = multiplier_.data();
    const Scalar* q = pivot_inv_.data();
    const Scalar* c = coupling_.data();
    Scalar a = pu[0], b = pv[0];
    for (int i = 1; i < n_; ++i) {
      const Scalar* mi = l + 4 * i;
      const Scalar y0 = pu[i] - (mi[0] * a + mi[1] * b);
      const Scalar y1 = pv[i] - (mi[2] * a + mi[3] * b);
      pu[i] = a = y0;
      pv[i] = b = y1;
    }
    a = b = Scalar(0);
    for (int i = n_ - 1; i >= 0; --i) {
      const Scalar* qi = q + 4 * i;
      const Scalar* ci = c + 4 * i;
      const Scalar y0 = pu[i], y1 = pv[i];
      const Scalar x0 = qi[0] * y0 + qi[1] * y1 - (ci[0] * a + ci[1] * b);
      const Scalar x1 = qi[2] * y0 + qi[3] * y1 - (ci[2] * a + ci[3] * b);
      pu[i] = a = x0;
      pv[i] = b = x1;
    }
  }

  std::pair<Field<Scalar>, Field<Scalar>> solve(Field<Scalar> u, Field<Scalar> v) const {
    solve_in_place(u, v);
    return {std::move(u), std::move(v)};
  }

 private:
  static void store(std::vector<Scalar>& dst, int i, const Block& blk) {
    dst[4 * i] = blk(0, 0);
    dst[4 * i + 1] = blk(0, 1);
    dst[4 * i + 2] = blk(1, 0);
    dst[4 * i + 3] = blk(1, 1);
  }

  int n_;
  std::vector<Scalar> multiplier_;
  std::vector<Scalar> pivot_inv_;
  std::vector<Scalar> coupling_;
};

template <typename Scalar>
std::pair<Field<Scalar>, Field<Scalar>> solve_block_tridiagonal(
    const BlockStepMatrix<Scalar>& m, const Field<Scalar>& rhs_u,
    const Field<Scalar>& rhs_v) {
  return BlockThomas<Scalar>(m).solve(rhs_u, rhs_v);
}

}  // namespace nullctl
