#pragma once

#include <stdexcept>

namespace nullctl {

/// Coefficients of the linear coupled system
///
///   u_t - u_xx = a u + b v + h 1_omega,   u = 0 on the boundary,
///   tau v_t - sigma v_xx = c u + d v,     v_x = 0 on the boundary.
template <typename Scalar = double>
struct SystemParams {
  Scalar a = 0;
  Scalar b = 0;
  Scalar c = 0;
  Scalar d = 0;
  Scalar tau = 1;
  Scalar sigma = 1;
  Scalar omega_lo = 0;
  Scalar omega_hi = 1;

  void validate() const {
    if (!(tau > Scalar(0))) throw std::invalid_argument("tau must be positive");
    if (!(sigma > Scalar(0))) throw std::invalid_argument("sigma must be positive");
    if (!(omega_lo >= Scalar(0) && omega_lo < omega_hi && omega_hi <= Scalar(1)))
      throw std::invalid_argument("control window must satisfy 0 <= lo < hi <= 1");
  }

  /// Coefficients of the backward (adjoint) system: the zero-order coupling
  /// matrix is transposed, so b and c trade places.
  SystemParams transposed() const {
    SystemParams out = *this;
    out.b = c;
    out.c = b;
    return out;
  }
};

}  // namespace nullctl
