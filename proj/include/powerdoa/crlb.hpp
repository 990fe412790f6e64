#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "powerdoa/training.hpp"

namespace powerdoa {

// Signal level and power-noise variance defining the SNR alpha^2 / lambda.
struct SnrSpec {
  double alpha = 1.0;
  double lambda = 1.0;  // 2 sigma^4 / L, one value for all mics

  double snr_db() const { return 10.0 * std::log10(alpha * alpha / lambda); }

  static SnrSpec from_snr_db(double alpha, double snr_db);

  void validate() const {
    if (!(alpha > 0.0) || !(lambda > 0.0)) {
      throw_error(ErrorCode::invalid_input, "SNR spec needs alpha > 0 and lambda > 0");
    }
  }
};

// SnrSpec implied by a trained model, with the per-mic spread of lambda that
// the single-lambda formula collapses.
struct ModelSnr {
  SnrSpec snr;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

ModelSnr snr_from_model(const DirectivityModel& model);

// Fisher information in (psi, alpha). G = diag(gains), h and h' stacked over
// mics:
//   (1/lambda) [ alpha^2 |G h'|^2   alpha <G h', G h> ]
//              [ alpha <G h', G h>  |G h|^2            ]
Eigen::Matrix2d fim(const DirectivityModel& model, const Angle& psi, const SnrSpec& snr);

// Closed-form CRLB of psi:
//   (lambda/alpha^2) |G h|^2 / (|G h|^2 |G h'|^2 - <G h, G h'>^2)
// nullopt where the Cauchy-Schwarz denominator is numerically zero.
std::optional<double> crlb(const DirectivityModel& model, const Angle& psi, const SnrSpec& snr);

struct CrlbCurve {
  std::vector<Angle> angles;
  std::vector<double> values_rad2;      // valid where !degenerate
  std::vector<bool> degenerate_mask;

  std::vector<double> values_deg2() const;
};

CrlbCurve crlb_curve(const DirectivityModel& model, const SnrSpec& snr, int grid_points);

}  // namespace powerdoa
