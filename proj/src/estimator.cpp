#include "powerdoa/estimator.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace powerdoa {

namespace {

void check_pair(const DirectivityModel& model, const PowerVector& obs) {
  model.validate();
  obs.validate();
  if (obs.n_mics() != model.n_mics()) {
    throw_error(ErrorCode::invalid_input, "observation width does not match model mic count");
  }
}

// Noise-compensated observation, normalized to unit length.
Eigen::VectorXd normalized_observation(const DirectivityModel& model, const PowerVector& obs) {
  Eigen::VectorXd compensated = obs.power - model.noise.sigma2;
  const double norm = compensated.norm();
  if (norm == 0.0) {
    throw_error(ErrorCode::no_signal, "observation is indistinguishable from the noise floor");
  }
  return compensated / norm;
}

double objective_at(const DirectivityModel& model, const Eigen::VectorXd& obs_unit,
                    const Angle& psi) {
  const PowerVector predicted = predict_power(model, psi);
  const Eigen::VectorXd compensated = predicted.power - model.noise.sigma2;
  const double norm = compensated.norm();
  if (norm == 0.0) {
    std::ostringstream msg;
    msg << "model predicts zero compensated power at " << psi.degrees() << " deg";
    throw_error(ErrorCode::model_degenerate, msg.str());
  }
  return (obs_unit - compensated / norm).squaredNorm();
}

}  // namespace

PowerVector predict_power(const DirectivityModel& model, const Angle& psi) {
  const FourierBasis b = model.basis();
  PowerVector out;
  out.frame_length = model.noise.frame_length;
  out.power.resize(model.n_mics());
  for (int n = 0; n < model.n_mics(); ++n) {
    out.power[n] = model.alpha * model.gains[n] *
                       eval(b, model.mics[static_cast<size_t>(n)], psi) +
                   model.noise.sigma2[n];
  }
  return out;
}

double objective(const DirectivityModel& model, const PowerVector& obs, const Angle& psi) {
  check_pair(model, obs);
  return objective_at(model, normalized_observation(model, obs), psi);
}

DoaEstimate estimate(const DirectivityModel& model, const PowerVector& obs,
                     const EstimateConfig& config) {
  check_pair(model, obs);
  if (config.grid_points < 2) {
    throw_error(ErrorCode::invalid_input, "grid needs at least two points");
  }

  const Eigen::VectorXd compensated = obs.power - model.noise.sigma2;
  const double energy = compensated.squaredNorm();
  const double gate = config.no_signal_factor * model.noise.lambda_vector().sum();
  if (energy < gate || energy == 0.0) {
    std::ostringstream msg;
    msg << "compensated energy " << energy << " below no-signal gate " << gate;
    throw_error(ErrorCode::no_signal, msg.str());
  }
  const Eigen::VectorXd obs_unit = compensated / compensated.norm();

  const std::vector<Angle> grid = uniform_angle_grid(config.grid_points);
  double best_value = std::numeric_limits<double>::infinity();
  double worst_value = -std::numeric_limits<double>::infinity();
  int best_index = 0;
  for (int i = 0; i < config.grid_points; ++i) {
    const double value = objective_at(model, obs_unit, grid[static_cast<size_t>(i)]);
    // Strict < with an ascending scan makes ties resolve to the smallest
    // canonical angle: the grid runs -pi upward with +pi last.
    if (value < best_value) {
      best_value = value;
      best_index = i;
    }
    worst_value = std::max(worst_value, value);
  }

  if (worst_value - best_value < 1e-14) {
    throw_error(ErrorCode::unidentifiable,
                "objective is flat over the grid; direction cannot be identified");
  }

  DoaEstimate out;
  out.grid_resolution = kTwoPi / config.grid_points;
  double best_angle = grid[static_cast<size_t>(best_index)].radians();

  if (config.refine) {
    // Golden-section in the unwrapped coordinate, one cell either side.
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = best_angle - out.grid_resolution;
    double hi = best_angle + out.grid_resolution;
    auto value_at = [&](double t) { return objective_at(model, obs_unit, Angle(t)); };
    double x1 = hi - invphi * (hi - lo);
    double x2 = lo + invphi * (hi - lo);
    double f1 = value_at(x1);
    double f2 = value_at(x2);
    double best_refined = best_angle;
    double best_refined_value = best_value;
    auto consider = [&](double t, double f) {
      if (f < best_refined_value) {
        best_refined_value = f;
        best_refined = t;
      }
    };
    consider(x1, f1);
    consider(x2, f2);
    while (hi - lo > config.refine_tolerance) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - invphi * (hi - lo);
        f1 = value_at(x1);
        consider(x1, f1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + invphi * (hi - lo);
        f2 = value_at(x2);
        consider(x2, f2);
      }
    }
    const double mid = 0.5 * (lo + hi);
    consider(mid, value_at(mid));
    best_angle = best_refined;
    best_value = best_refined_value;
    out.refined = true;
  }

  out.psi_hat = Angle(best_angle);
  out.residual = best_value;
  return out;
}

}  // namespace powerdoa
