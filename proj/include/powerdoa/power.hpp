#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "powerdoa/error.hpp"

namespace powerdoa {

// A window of raw samples, one row per microphone.
struct SignalFrame {
  Eigen::MatrixXd samples;  // N x L
  double sample_rate = 0.0;

  int n_mics() const { return static_cast<int>(samples.rows()); }
  int n_samples() const { return static_cast<int>(samples.cols()); }

  void validate() const;
};

// Per-microphone mean-square power over one frame.
struct PowerVector {
  Eigen::VectorXd power;  // N, entries >= 0
  int frame_length = 0;

  int n_mics() const { return static_cast<int>(power.size()); }

  void validate() const;
};

// Per-microphone noise variance plus the frame length that converts it into
// power-noise variance lambda_n = 2 sigma_n^4 / L.
struct NoiseStats {
  Eigen::VectorXd sigma2;  // N, entries > 0
  int frame_length = 0;

  int n_mics() const { return static_cast<int>(sigma2.size()); }

  double lambda(int mic) const { return 2.0 * sigma2[mic] * sigma2[mic] / frame_length; }

  Eigen::VectorXd lambda_vector() const {
    return 2.0 * sigma2.array().square() / frame_length;
  }

  NoiseStats with_frame_length(int length) const;

  void validate() const;
};

enum class NoiseSampleMode { gaussian_approx, exact_chisq };

// Mean-square power per microphone: P_n = (1/L) sum_l samples(n,l)^2.
PowerVector compute_power(const SignalFrame& frame);

struct PowerDecomposition {
  Eigen::VectorXd p_signal;  // mean s^2
  Eigen::VectorXd p_cross;   // mean 2 s w
  Eigen::VectorXd p_noise;   // mean w^2
};

// Splits the power of (signal + noise) into its three exact terms. Diagnostic
// only; real hardware observes the sum.
PowerDecomposition decompose_power(const SignalFrame& signal, const SignalFrame& noise);

// Mean and variance of the noise-power term e_n under the normal
// approximation of the scaled chi-square.
struct PowerNoiseMoments {
  double mean;
  double variance;
};

PowerNoiseMoments power_noise_distribution(const NoiseStats& noise, int mic);

// One draw of e_n per microphone. gaussian_approx draws N(sigma^2, 2 sigma^4/L);
// exact_chisq draws (sigma^2/L) * chisq(L). Deterministic given the seed.
Eigen::VectorXd sample_power_noise(const NoiseStats& noise, uint64_t seed,
                                   NoiseSampleMode mode);

}  // namespace powerdoa
