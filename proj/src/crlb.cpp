#include "powerdoa/crlb.hpp"

#include <cmath>

namespace powerdoa {

SnrSpec SnrSpec::from_snr_db(double alpha, double snr_db) {
  SnrSpec spec{alpha, alpha * alpha / std::pow(10.0, snr_db / 10.0)};
  spec.validate();
  return spec;
}

ModelSnr snr_from_model(const DirectivityModel& model) {
  model.validate();
  const Eigen::VectorXd lambdas = model.noise.lambda_vector();
  ModelSnr out;
  out.snr = SnrSpec{model.alpha, lambdas.mean()};
  out.lambda_min = lambdas.minCoeff();
  out.lambda_max = lambdas.maxCoeff();
  out.snr.validate();
  return out;
}

namespace {

struct GainWeighted {
  Eigen::VectorXd gh;   // diag(g) h(psi)
  Eigen::VectorXd ghp;  // diag(g) h'(psi)
};

GainWeighted gain_weighted(const DirectivityModel& model, const Angle& psi) {
  const FourierBasis b = model.basis();
  GainWeighted out;
  out.gh.resize(model.n_mics());
  out.ghp.resize(model.n_mics());
  for (int n = 0; n < model.n_mics(); ++n) {
    const MicDirectivity& mic = model.mics[static_cast<size_t>(n)];
    out.gh[n] = model.gains[n] * eval(b, mic, psi);
    out.ghp[n] = model.gains[n] * eval_derivative(b, mic, psi);
  }
  return out;
}

}  // namespace

Eigen::Matrix2d fim(const DirectivityModel& model, const Angle& psi, const SnrSpec& snr) {
  model.validate();
  snr.validate();
  const GainWeighted gw = gain_weighted(model, psi);
  const double alpha = snr.alpha;
  const double cross = gw.ghp.dot(gw.gh);
  Eigen::Matrix2d info;
  info(0, 0) = alpha * alpha * gw.ghp.squaredNorm();
  info(0, 1) = alpha * cross;
  info(1, 0) = alpha * cross;
  info(1, 1) = gw.gh.squaredNorm();
  return info / snr.lambda;
}

std::optional<double> crlb(const DirectivityModel& model, const Angle& psi, const SnrSpec& snr) {
  model.validate();
  snr.validate();
  const GainWeighted gw = gain_weighted(model, psi);
  const double gh2 = gw.gh.squaredNorm();
  const double ghp2 = gw.ghp.squaredNorm();
  const double cross = gw.gh.dot(gw.ghp);
  const double denominator = gh2 * ghp2 - cross * cross;
  // Scale-free degeneracy threshold; exact equality in Cauchy-Schwarz means
  // h and h' are parallel and psi carries no information.
  if (denominator <= 1e-12 * gh2 * ghp2) {
    return std::nullopt;
  }
  return snr.lambda / (snr.alpha * snr.alpha) * gh2 / denominator;
}

std::vector<double> CrlbCurve::values_deg2() const {
  const double scale = std::pow(180.0 / kPi, 2);
  std::vector<double> out(values_rad2.size());
  for (size_t i = 0; i < values_rad2.size(); ++i) {
    out[i] = values_rad2[i] * scale;
  }
  return out;
}

CrlbCurve crlb_curve(const DirectivityModel& model, const SnrSpec& snr, int grid_points) {
  if (grid_points < 2) {
    throw_error(ErrorCode::invalid_input, "CRLB curve needs at least two grid points");
  }
  CrlbCurve curve;
  curve.angles = uniform_angle_grid(grid_points);
  curve.values_rad2.resize(curve.angles.size(), 0.0);
  curve.degenerate_mask.resize(curve.angles.size(), false);
  for (size_t i = 0; i < curve.angles.size(); ++i) {
    const std::optional<double> value = crlb(model, curve.angles[i], snr);
    if (value) {
      curve.values_rad2[i] = *value;
    } else {
      curve.degenerate_mask[i] = true;
    }
  }
  return curve;
}

}  // namespace powerdoa
