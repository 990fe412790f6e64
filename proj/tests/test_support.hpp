#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "powerdoa/directivity.hpp"
#include "powerdoa/power.hpp"
#include "powerdoa/rng.hpp"
#include "powerdoa/training.hpp"

namespace testsupport {

using namespace powerdoa;

inline SignalFrame random_frame(RandomEngine& engine, int n_mics, int n_samples,
                                double amplitude = 1.0) {
  std::uniform_real_distribution<double> unit(-amplitude, amplitude);
  SignalFrame frame;
  frame.sample_rate = 48000.0;
  frame.samples.resize(n_mics, n_samples);
  for (int n = 0; n < n_mics; ++n) {
    for (int l = 0; l < n_samples; ++l) {
      frame.samples(n, l) = unit(engine);
    }
  }
  return frame;
}

// Exact binomial coefficient table row, exact in doubles for small n.
inline double binomial(int n, int k) {
  double value = 1.0;
  for (int i = 1; i <= k; ++i) {
    value = value * (n - k + i) / i;
  }
  return value;
}

// Fourier coefficients of ((1 + cos x)/2)^order, an exact series of that
// order: 4^-q [C(2q,q) + 2 sum_d C(2q,q-d) cos(d x)].
inline Eigen::VectorXd cos_power_coefficients(int order) {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(2 * order + 1);
  const double scale = std::pow(4.0, -order);
  theta[0] = binomial(2 * order, order) * scale;
  for (int d = 1; d <= order; ++d) {
    theta[2 * d - 1] = 2.0 * binomial(2 * order, order - d) * scale;
  }
  return theta;
}

// A valid model whose directivities are rotated copies of the cos-power
// pattern. Everything satisfies the model invariants by construction.
inline DirectivityModel make_cos_power_model(int n_mics, int order, double alpha, double sigma2,
                                             int frame_length, double gain_variation = 0.1) {
  DirectivityModel model;
  model.alpha = alpha;
  model.order = order;
  model.noise = NoiseStats{Eigen::VectorXd::Constant(n_mics, sigma2), frame_length};
  Eigen::VectorXd gains(n_mics);
  for (int n = 0; n < n_mics; ++n) {
    gains[n] = 1.0 + gain_variation * std::cos(kTwoPi * n / n_mics);
    model.facing_angles.emplace_back(-kTwoPi * n / n_mics);
  }
  model.gains = gains / gains.norm();
  const Eigen::VectorXd base = cos_power_coefficients(order);
  for (int n = 0; n < n_mics; ++n) {
    model.mics.push_back(
        MicDirectivity{rotate_coefficients(base, model.facing_angles[static_cast<size_t>(n)])});
  }
  model.validate();
  return model;
}

// Random valid model: damped random harmonics with theta_0 solved from the
// peak constraint.
inline DirectivityModel make_random_model(RandomEngine& engine, int n_mics, int order,
                                          int frame_length = 48000) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> positive(0.5, 1.5);
  DirectivityModel model;
  model.alpha = positive(engine);
  model.order = order;
  Eigen::VectorXd sigma2(n_mics);
  Eigen::VectorXd gains(n_mics);
  for (int n = 0; n < n_mics; ++n) {
    sigma2[n] = 1e-4 * positive(engine);
    gains[n] = positive(engine);
    model.facing_angles.emplace_back(kTwoPi * unit(engine));
  }
  model.noise = NoiseStats{sigma2, frame_length};
  model.gains = gains / gains.norm();
  for (int n = 0; n < n_mics; ++n) {
    Eigen::VectorXd theta(2 * order + 1);
    const double facing = model.facing_angles[static_cast<size_t>(n)].radians();
    double theta0 = 1.0;
    for (int d = 1; d <= order; ++d) {
      const double c = 0.4 * unit(engine) / d;
      const double s = 0.4 * unit(engine) / d;
      theta[2 * d - 1] = c;
      theta[2 * d] = s;
      theta0 -= c * std::cos(d * facing) + s * std::sin(d * facing);
    }
    theta[0] = theta0;
    model.mics.push_back(MicDirectivity{theta});
  }
  model.validate();
  return model;
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

inline Moments sample_moments(const std::vector<double>& values) {
  Moments m;
  for (double v : values) m.mean += v;
  m.mean /= values.size();
  for (double v : values) m.variance += (v - m.mean) * (v - m.mean);
  m.variance /= values.size() - 1;
  return m;
}

}  // namespace testsupport
