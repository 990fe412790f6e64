#include "powerdoa/power.hpp"

#include <random>

#include "powerdoa/rng.hpp"

namespace powerdoa {

void SignalFrame::validate() const {
  if (samples.rows() < 1 || samples.cols() < 1) {
    throw_error(ErrorCode::invalid_input, "signal frame must have N >= 1 mics and L >= 1 samples");
  }
  if (!samples.allFinite()) {
    throw_error(ErrorCode::invalid_input, "signal frame contains non-finite samples");
  }
}

void PowerVector::validate() const {
  if (power.size() < 1) {
    throw_error(ErrorCode::invalid_input, "power vector is empty");
  }
  if (frame_length < 1) {
    throw_error(ErrorCode::invalid_input, "power vector frame_length must be >= 1");
  }
  if (!power.allFinite() || (power.array() < 0.0).any()) {
    throw_error(ErrorCode::invalid_input, "power entries must be finite and non-negative");
  }
}

NoiseStats NoiseStats::with_frame_length(int length) const {
  NoiseStats out{sigma2, length};
  out.validate();
  return out;
}

void NoiseStats::validate() const {
  if (sigma2.size() < 1) {
    throw_error(ErrorCode::invalid_input, "noise stats are empty");
  }
  if (frame_length < 1) {
    throw_error(ErrorCode::invalid_input, "noise stats frame_length must be >= 1");
  }
  if (!sigma2.allFinite() || (sigma2.array() <= 0.0).any()) {
    throw_error(ErrorCode::invalid_input, "noise variances must be finite and > 0");
  }
}

PowerVector compute_power(const SignalFrame& frame) {
  frame.validate();
  PowerVector out;
  out.frame_length = frame.n_samples();
  out.power = frame.samples.array().square().rowwise().mean();
  return out;
}

PowerDecomposition decompose_power(const SignalFrame& signal, const SignalFrame& noise) {
  signal.validate();
  noise.validate();
  if (signal.samples.rows() != noise.samples.rows() ||
      signal.samples.cols() != noise.samples.cols()) {
    throw_error(ErrorCode::invalid_input, "signal and noise frames must have identical shape");
  }
  PowerDecomposition out;
  out.p_signal = signal.samples.array().square().rowwise().mean();
  out.p_cross = (2.0 * signal.samples.array() * noise.samples.array()).rowwise().mean();
  out.p_noise = noise.samples.array().square().rowwise().mean();
  return out;
}

PowerNoiseMoments power_noise_distribution(const NoiseStats& noise, int mic) {
  noise.validate();
  if (mic < 0 || mic >= noise.n_mics()) {
    throw_error(ErrorCode::invalid_input, "mic index out of range");
  }
  const double s2 = noise.sigma2[mic];
  return {s2, 2.0 * s2 * s2 / noise.frame_length};
}

Eigen::VectorXd sample_power_noise(const NoiseStats& noise, uint64_t seed,
                                   NoiseSampleMode mode) {
  noise.validate();
  RandomEngine engine = make_engine(seed);
  const int n = noise.n_mics();
  Eigen::VectorXd draws(n);
  if (mode == NoiseSampleMode::gaussian_approx) {
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
      const auto [mean, variance] = power_noise_distribution(noise, i);
      draws[i] = mean + std::sqrt(variance) * unit(engine);
    }
  } else {
    std::chi_squared_distribution<double> chisq(noise.frame_length);
    for (int i = 0; i < n; ++i) {
      draws[i] = noise.sigma2[i] / noise.frame_length * chisq(engine);
    }
  }
  return draws;
}

}  // namespace powerdoa
