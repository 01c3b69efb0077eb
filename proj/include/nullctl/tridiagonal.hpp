#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include <Eigen/Core>

#include "nullctl/errors.hpp"
#include "nullctl/mesh.hpp"

namespace nullctl {

/// Scalar tridiagonal system, factored once by the Thomas algorithm.
/// Row i reads lower(i) x_{i-1} + diag(i) x_i + upper(i) x_{i+1}.
template <typename Scalar = double>
class Tridiagonal {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Tridiagonal(Vector lower, Vector diag, Vector upper)
      : upper_(std::move(upper)), lower_(std::move(lower)) {
    const Eigen::Index n = diag.size();
    if (n == 0 || lower_.size() != n || upper_.size() != n)
      throw std::invalid_argument("tridiagonal bands of inconsistent length");
    pivot_.resize(n);
    const Scalar tiny = 64 * std::numeric_limits<Scalar>::epsilon();
    using std::abs;
    for (Eigen::Index i = 0; i < n; ++i) {
      Scalar p = diag(i);
      if (i > 0) p -= lower_(i) * upper_(i - 1) / pivot_(i - 1);
      if (abs(p) <= tiny * abs(diag(i))) throw SingularPivotError(static_cast<int>(i));
      pivot_(i) = p;
    }
  }

  Eigen::Index size() const { return pivot_.size(); }

  void solve_in_place(Eigen::Ref<Vector> x) const {
    const Eigen::Index n = pivot_.size();
    if (x.size() != n) throw std::invalid_argument("right-hand side length mismatch");
    for (Eigen::Index i = 1; i < n; ++i) x(i) -= lower_(i) / pivot_(i - 1) * x(i - 1);
    x(n - 1) /= pivot_(n - 1);
    for (Eigen::Index i = n - 2; i >= 0; --i) x(i) = (x(i) - upper_(i) * x(i + 1)) / pivot_(i);
  }

  Vector solve(Vector x) const {
    solve_in_place(x);
    return x;
  }

 private:
  Vector upper_, lower_, pivot_;
};

/// Backward Euler matrix (1 - dt a) I - dt D_D with identity rows at the two
/// Dirichlet nodes.
template <typename Scalar>
Tridiagonal<Scalar> dirichlet_step_matrix(Scalar a, Scalar dt, const Grid1D<Scalar>& g) {
  using Vector = typename Tridiagonal<Scalar>::Vector;
  const int n = g.n_nodes();
  const Scalar k = dt / (g.h() * g.h());
  Vector lower = Vector::Constant(n, -k), upper = Vector::Constant(n, -k);
  Vector diag = Vector::Constant(n, 1 - dt * a + 2 * k);
  lower(0) = upper(0) = lower(n - 1) = upper(n - 1) = 0;
  diag(0) = diag(n - 1) = 1;
  return Tridiagonal<Scalar>(std::move(lower), std::move(diag), std::move(upper));
}

}  // namespace nullctl
