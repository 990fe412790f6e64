#include "powerdoa/directivity.hpp"

#include <cmath>

namespace powerdoa {

namespace {

void check_dimensions(const FourierBasis& basis, const MicDirectivity& mic) {
  basis.validate();
  mic.validate();
  if (mic.theta.size() != basis.row_length()) {
    throw_error(ErrorCode::invalid_input,
                "coefficient length does not match basis order");
  }
}

}  // namespace

Eigen::RowVectorXd basis_row(const FourierBasis& basis, const Angle& psi) {
  basis.validate();
  Eigen::RowVectorXd row(basis.row_length());
  row[0] = 1.0;
  const double p = psi.radians();
  for (int d = 1; d <= basis.order; ++d) {
    row[2 * d - 1] = std::cos(d * p);
    row[2 * d] = std::sin(d * p);
  }
  return row;
}

double eval(const FourierBasis& basis, const MicDirectivity& mic, const Angle& psi) {
  check_dimensions(basis, mic);
  const double p = psi.radians();
  double value = mic.theta[0];
  for (int d = 1; d <= basis.order; ++d) {
    value += mic.theta[2 * d - 1] * std::cos(d * p) + mic.theta[2 * d] * std::sin(d * p);
  }
  return value;
}

double eval_derivative(const FourierBasis& basis, const MicDirectivity& mic, const Angle& psi) {
  check_dimensions(basis, mic);
  const double p = psi.radians();
  double value = 0.0;
  for (int d = 1; d <= basis.order; ++d) {
    value += d * (-mic.theta[2 * d - 1] * std::sin(d * p) + mic.theta[2 * d] * std::cos(d * p));
  }
  return value;
}

Eigen::VectorXd rotate_coefficients(const Eigen::VectorXd& theta, const Angle& delta) {
  MicDirectivity probe{theta};
  probe.validate();
  const int order = probe.order();
  Eigen::VectorXd out(theta.size());
  out[0] = theta[0];
  const double p = delta.radians();
  for (int d = 1; d <= order; ++d) {
    const double c = std::cos(d * p);
    const double s = std::sin(d * p);
    const double a = theta[2 * d - 1];
    const double b = theta[2 * d];
    // cos(d(psi - delta)) and sin(d(psi - delta)) expanded in cos/sin(d psi)
    out[2 * d - 1] = a * c - b * s;
    out[2 * d] = a * s + b * c;
  }
  return out;
}

}  // namespace powerdoa
