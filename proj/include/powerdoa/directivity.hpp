#pragma once

#include <Eigen/Core>

#include "powerdoa/angle.hpp"
#include "powerdoa/error.hpp"

namespace powerdoa {

// Truncated Fourier basis of order D. Rows have layout
// [1, cos p, sin p, cos 2p, sin 2p, ..., cos Dp, sin Dp], length 2D+1.
struct FourierBasis {
  int order = 0;

  int row_length() const { return 2 * order + 1; }

  void validate() const {
    if (order < 0) {
      throw_error(ErrorCode::invalid_input, "Fourier order must be >= 0");
    }
  }
};

// Directional-sensitivity coefficients for one microphone, index-aligned with
// FourierBasis rows.
struct MicDirectivity {
  Eigen::VectorXd theta;  // 2D+1

  int order() const { return (static_cast<int>(theta.size()) - 1) / 2; }

  void validate() const {
    if (theta.size() < 1 || theta.size() % 2 == 0) {
      throw_error(ErrorCode::invalid_input, "coefficient vector must have odd length 2D+1");
    }
    if (!theta.allFinite()) {
      throw_error(ErrorCode::invalid_input, "coefficients must be finite");
    }
  }
};

Eigen::RowVectorXd basis_row(const FourierBasis& basis, const Angle& psi);

// h(psi) = Phi(psi) . theta
double eval(const FourierBasis& basis, const MicDirectivity& mic, const Angle& psi);

// dh/dpsi = sum_d d (-theta_{d,c} sin(d psi) + theta_{d,s} cos(d psi))
double eval_derivative(const FourierBasis& basis, const MicDirectivity& mic, const Angle& psi);

// Coefficients of psi -> h(psi - delta) given the coefficients of h.
Eigen::VectorXd rotate_coefficients(const Eigen::VectorXd& theta, const Angle& delta);

}  // namespace powerdoa
