#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <vector>

#include "powerdoa/angle.hpp"
#include "powerdoa/directivity.hpp"
#include "powerdoa/power.hpp"

namespace powerdoa {

// Labeled power measurements from a calibration sweep.
struct TrainingSet {
  std::vector<Angle> angles;        // K training DOAs
  std::vector<PowerVector> powers;  // K observations, N mics each
  NoiseStats noise;                 // per-mic sigma^2 and frame length L
  std::vector<Angle> facing_angles; // N, where each mic points

  int n_angles() const { return static_cast<int>(angles.size()); }
  int n_mics() const { return static_cast<int>(facing_angles.size()); }

  // K x N matrix view of the power observations.
  Eigen::MatrixXd power_matrix() const;

  void validate() const;
};

// The trained fingerprint: global level, per-mic gains and Fourier
// coefficients, plus the noise statistics the fit was weighted with.
struct DirectivityModel {
  double alpha = 0.0;
  Eigen::VectorXd gains;             // N, > 0, unit square sum
  std::vector<MicDirectivity> mics;  // N coefficient vectors
  int order = 0;
  NoiseStats noise;
  std::vector<Angle> facing_angles;  // N

  int n_mics() const { return static_cast<int>(gains.size()); }

  FourierBasis basis() const { return FourierBasis{order}; }

  void validate() const;
};

struct ConstraintResiduals {
  double gain_norm = 0.0;   // |sum g^2 - 1|
  double peak = 0.0;        // max_n |h(facing_n) - 1|
  double gain_floor = 0.0;  // max(0, -min_n g_n)
  double alpha_floor = 0.0; // max(0, -alpha)
};

struct FitReport {
  double loss = 0.0;
  int iterations = 0;
  bool converged = false;
  ConstraintResiduals constraint_residuals;
  double bic = 0.0;
  std::vector<int> uninformative_mics;   // mics whose power never varies
  std::vector<double> loss_history;      // loss after each accepted step
};

struct SolverConfig {
  int max_iterations = 500;
  double relative_loss_tolerance = 1e-10;
  double gradient_tolerance = 1e-8;
  double initial_damping_scale = 1e-3;   // tau in mu0 = tau * max diag(J^T J)
  double ridge = 1e-6;                   // regularizer for the linear warm start
  uint64_t init_perturbation_seed = 0;   // 0 = deterministic warm start
  double init_perturbation_scale = 0.0;
};

// Weighted training loss, Eq.-style:
//   sum_n L/(2 sigma_n^4) sum_k (P_n(psi_k) - (alpha g_n h(psi_k, theta_n) + sigma_n^2))^2
double loss(const DirectivityModel& model, const TrainingSet& data);

// Fits alpha, gains and coefficients of the given order. Constraints are
// eliminated by reparameterization (alpha = exp(a), gains by normalized
// exponentials, theta_0 solved out of the peak constraint), then the reduced
// problem is solved with Levenberg-Marquardt.
std::pair<DirectivityModel, FitReport> fit(const TrainingSet& data, int order,
                                           const SolverConfig& config = {});

struct OrderSelection {
  int best_order = 0;
  std::map<int, double> scores;                 // order -> BIC
  std::map<int, std::string> failures;          // order -> failure reason
  std::map<int, FitReport> reports;
};

// Fits every candidate order and returns the BIC minimizer. Ties within 1e-9
// go to the smaller order.
OrderSelection select_order(const TrainingSet& data, const std::vector<int>& candidate_orders,
                            const SolverConfig& config = {});

// sigma_n^2 from a background-only recording (mean square per mic).
NoiseStats estimate_noise_floor(const SignalFrame& background);

// Number of free parameters after constraint elimination: N(2D+1).
int free_parameter_count(int n_mics, int order);

// BIC for a completed fit: 2 V + p ln(N K).
double bic_score(double loss_value, int n_mics, int n_angles, int order);

}  // namespace powerdoa
