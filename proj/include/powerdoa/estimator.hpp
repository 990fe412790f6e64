#pragma once

#include "powerdoa/training.hpp"

namespace powerdoa {

struct DoaEstimate {
  Angle psi_hat;
  double residual = 0.0;        // objective value at psi_hat, in [0, 4]
  double grid_resolution = 0.0; // radians between grid points
  bool refined = false;
};

struct EstimateConfig {
  int grid_points = 720;
  bool refine = true;
  double refine_tolerance = 1e-6;  // radians
  // Declare no-signal when |P - sigma^2|^2 < factor * sum_n lambda_n.
  double no_signal_factor = 1.0;
};

// Model power at one angle: entry n is alpha g_n h(psi, theta_n) + sigma_n^2.
PowerVector predict_power(const DirectivityModel& model, const Angle& psi);

// Normalized least-squares mismatch between the observation and the model
// profile at psi. Both sides are noise-compensated and scaled to unit norm,
// so the signal level drops out.
double objective(const DirectivityModel& model, const PowerVector& obs, const Angle& psi);

// Grid search over (-pi, pi] plus optional golden-section refinement within
// one grid cell. Ties on the grid go to the smallest canonical angle.
DoaEstimate estimate(const DirectivityModel& model, const PowerVector& obs,
                     const EstimateConfig& config = {});

}  // namespace powerdoa
