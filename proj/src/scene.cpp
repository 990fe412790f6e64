#include "powerdoa/scene.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "powerdoa/rng.hpp"

namespace powerdoa {

namespace {

constexpr uint64_t kTrainStream = 1;
constexpr uint64_t kBenchStream = 3;

std::vector<Angle> circular_facing(int n_mics) {
  std::vector<Angle> facing;
  facing.reserve(static_cast<size_t>(n_mics));
  for (int n = 0; n < n_mics; ++n) {
    facing.emplace_back(-kTwoPi * n / n_mics);
  }
  return facing;
}

Eigen::VectorXd default_gains(int n_mics, double gain_variation) {
  Eigen::VectorXd gains(n_mics);
  for (int n = 0; n < n_mics; ++n) {
    gains[n] = 1.0 + gain_variation * std::cos(kTwoPi * n / n_mics);
  }
  return gains;
}

}  // namespace

void GroundTruthArray::validate() const {
  if (n_mics < 1 || static_cast<int>(facing_angles.size()) != n_mics ||
      static_cast<int>(patterns.size()) != n_mics || gains.size() != n_mics ||
      sigma2.size() != n_mics) {
    throw_error(ErrorCode::invalid_input, "ground-truth array has inconsistent sizes");
  }
  if ((gains.array() <= 0.0).any() || (sigma2.array() <= 0.0).any()) {
    throw_error(ErrorCode::invalid_input, "ground-truth gains and sigma^2 must be > 0");
  }
  for (int n = 0; n < n_mics; ++n) {
    const double peak = patterns[static_cast<size_t>(n)](facing_angles[static_cast<size_t>(n)].radians());
    if (std::abs(peak - 1.0) > 1e-9) {
      throw_error(ErrorCode::invalid_input, "ground-truth patterns must peak at 1 when facing the source");
    }
  }
}

GroundTruthArray GroundTruthArray::circular_cardioid(int n_mics, double kappa, double sharpness,
                                                     double sigma2, double gain_variation,
                                                     double irregularity, uint64_t pattern_seed) {
  if (kappa <= 0.0 || kappa >= 1.0 || sharpness < 1.0) {
    throw_error(ErrorCode::invalid_input, "cardioid needs kappa in (0,1) and sharpness >= 1");
  }
  if (irregularity < 0.0 || irregularity > 0.15) {
    throw_error(ErrorCode::invalid_input, "irregularity must be in [0, 0.15]");
  }
  GroundTruthArray array;
  array.n_mics = n_mics;
  array.facing_angles = circular_facing(n_mics);
  array.gains = default_gains(n_mics, gain_variation);
  array.sigma2 = Eigen::VectorXd::Constant(n_mics, sigma2);
  constexpr int ripple_lo = 8, ripple_hi = 14;
  constexpr int n_ripple = ripple_hi - ripple_lo + 1;
  for (int n = 0; n < n_mics; ++n) {
    const double facing = array.facing_angles[static_cast<size_t>(n)].radians();
    // Ripple coefficients per mic; the amplitude bound keeps patterns > 0.
    std::vector<double> ripple_cos(n_ripple, 0.0), ripple_sin(n_ripple, 0.0);
    if (irregularity > 0.0) {
      RandomEngine engine = make_engine(sub_seed(pattern_seed, 17, static_cast<uint64_t>(n)));
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      const double scale = irregularity / std::sqrt(double(n_ripple));
      for (int j = 0; j < n_ripple; ++j) {
        ripple_cos[static_cast<size_t>(j)] = scale * unit(engine);
        ripple_sin[static_cast<size_t>(j)] = scale * unit(engine);
      }
    }
    auto ripple = [ripple_cos, ripple_sin](double psi) {
      double value = 1.0;
      for (int j = 0; j < n_ripple; ++j) {
        const int harmonic = ripple_lo + j;
        value += ripple_cos[static_cast<size_t>(j)] * std::cos(harmonic * psi) +
                 ripple_sin[static_cast<size_t>(j)] * std::sin(harmonic * psi);
      }
      return value;
    };
    const double peak_ripple = ripple(facing);
    array.patterns.push_back([kappa, sharpness, facing, ripple, peak_ripple](double psi) {
      const double lobe = 0.5 * (1.0 + std::cos(psi - facing));
      return std::pow(kappa + (1.0 - kappa) * lobe, sharpness) * ripple(psi) / peak_ripple;
    });
  }
  array.validate();
  return array;
}

GroundTruthArray GroundTruthArray::circular_cos_power(int n_mics, int order, double sigma2,
                                                      double gain_variation) {
  if (order < 0) {
    throw_error(ErrorCode::invalid_input, "cos-power order must be >= 0");
  }
  GroundTruthArray array;
  array.n_mics = n_mics;
  array.facing_angles = circular_facing(n_mics);
  array.gains = default_gains(n_mics, gain_variation);
  array.sigma2 = Eigen::VectorXd::Constant(n_mics, sigma2);
  for (int n = 0; n < n_mics; ++n) {
    const double facing = array.facing_angles[static_cast<size_t>(n)].radians();
    array.patterns.push_back([order, facing](double psi) {
      return std::pow(0.5 * (1.0 + std::cos(psi - facing)), order);
    });
  }
  array.validate();
  return array;
}

GroundTruthArray GroundTruthArray::from_model(const DirectivityModel& model) {
  model.validate();
  GroundTruthArray array;
  array.n_mics = model.n_mics();
  array.facing_angles = model.facing_angles;
  array.gains = model.gains;
  array.sigma2 = model.noise.sigma2;
  const FourierBasis basis = model.basis();
  for (int n = 0; n < array.n_mics; ++n) {
    const MicDirectivity mic = model.mics[static_cast<size_t>(n)];
    array.patterns.push_back([basis, mic](double psi) { return eval(basis, mic, Angle(psi)); });
  }
  // Intentionally no validate(): a fitted FS may undershoot/overshoot the
  // peak by the fit tolerance, which is fine for a matched-model truth.
  if (array.n_mics < 1) {
    throw_error(ErrorCode::invalid_input, "model has no microphones");
  }
  return array;
}

const char* signal_type_name(SignalType type) {
  switch (type) {
    case SignalType::wideband:
      return "wideband";
    case SignalType::attenuated:
      return "attenuated";
    case SignalType::amplified:
      return "amplified";
    case SignalType::narrowband:
      return "narrowband";
  }
  return "unknown";
}

SignalType signal_type_from_name(const std::string& name) {
  if (name == "wideband") return SignalType::wideband;
  if (name == "attenuated") return SignalType::attenuated;
  if (name == "amplified") return SignalType::amplified;
  if (name == "narrowband") return SignalType::narrowband;
  throw_error(ErrorCode::invalid_input, "unknown signal type: " + name);
}

double power_scale(SignalType type) {
  switch (type) {
    case SignalType::attenuated:
      return 0.25;  // amplitude x 0.5
    case SignalType::amplified:
      return 4.0;  // amplitude x 2
    default:
      return 1.0;
  }
}

void ScenarioConfig::validate() const {
  if (train_angles.empty()) {
    throw_error(ErrorCode::invalid_input, "scenario needs at least one training angle");
  }
  if (frame_length() < 1) {
    throw_error(ErrorCode::invalid_input, "scenario duration and sample rate give an empty frame");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw_error(ErrorCode::invalid_input, "scenario alpha must be finite and >= 0");
  }
  for (const Angle& v : validation_angles) {
    for (const Angle& t : train_angles) {
      if (v == t) {
        std::ostringstream msg;
        msg << "validation angle " << v.degrees() << " deg collides with a training angle";
        throw_error(ErrorCode::invalid_input, msg.str());
      }
    }
  }
}

ScenarioConfig ScenarioConfig::protocol_default(uint64_t seed) {
  ScenarioConfig cfg;
  cfg.seed = seed;
  cfg.train_angles = uniform_angle_grid(24);
  cfg.validation_angles.reserve(24);
  const double offset = kPi / 24.0;  // half the 15 deg training spacing
  for (const Angle& t : cfg.train_angles) {
    cfg.validation_angles.emplace_back(t.radians() + offset);
  }
  cfg.validate();
  return cfg;
}

namespace {

// Noise-power draw around sigma^2 (the e_n fluctuation is e - sigma^2).
Eigen::VectorXd noise_power_draw(const NoiseStats& noise, NoiseMode mode, uint64_t seed) {
  switch (mode) {
    case NoiseMode::none:
      return noise.sigma2;
    case NoiseMode::gaussian:
      return sample_power_noise(noise, seed, NoiseSampleMode::gaussian_approx);
    case NoiseMode::chisq:
      return sample_power_noise(noise, seed, NoiseSampleMode::exact_chisq);
  }
  throw_error(ErrorCode::invalid_input, "unknown noise mode");
}

PowerVector synthesize_power(const GroundTruthArray& array, const Angle& psi,
                             const ScenarioConfig& cfg, SignalType type, uint64_t seed) {
  const int frame_length = cfg.frame_length();
  const NoiseStats noise{array.sigma2, frame_length};
  const Eigen::VectorXd draw = noise_power_draw(noise, cfg.noise_mode, seed);
  const double scale = power_scale(type);

  PowerVector out;
  out.frame_length = frame_length;
  out.power.resize(array.n_mics);
  for (int n = 0; n < array.n_mics; ++n) {
    const double signal = cfg.alpha * array.gains[n] *
                          array.patterns[static_cast<size_t>(n)](psi.radians());
    const double fluctuation = draw[n] - array.sigma2[n];
    out.power[n] = array.sigma2[n] + scale * (signal + fluctuation);
  }
  if ((out.power.array() < 0.0).any()) {
    throw_error(ErrorCode::invalid_input,
                "synthesized power went negative; the frame is too short for this noise level");
  }
  return out;
}

}  // namespace

TrainingSet generate_training_set(const GroundTruthArray& array, const ScenarioConfig& cfg) {
  array.validate();
  cfg.validate();
  TrainingSet set;
  set.angles = cfg.train_angles;
  set.noise = NoiseStats{array.sigma2, cfg.frame_length()};
  set.facing_angles = array.facing_angles;
  set.powers.reserve(cfg.train_angles.size());
  for (size_t k = 0; k < cfg.train_angles.size(); ++k) {
    set.powers.push_back(synthesize_power(array, cfg.train_angles[k], cfg, SignalType::wideband,
                                          sub_seed(cfg.seed, kTrainStream, k)));
  }
  set.validate();
  return set;
}

PowerVector generate_observation(const GroundTruthArray& array, const Angle& psi,
                                 const ScenarioConfig& cfg, uint64_t seed) {
  array.validate();
  cfg.validate();
  return synthesize_power(array, psi, cfg, cfg.signal_type, seed);
}

SignalFrame synthesize_frame(const GroundTruthArray& array, const Angle& psi,
                             const ScenarioConfig& cfg, uint64_t seed) {
  array.validate();
  cfg.validate();
  const int frame_length = cfg.frame_length();
  RandomEngine source_engine = make_engine(sub_seed(seed, 11));
  std::normal_distribution<double> unit(0.0, 1.0);

  // Shared source waveform, normalized to exactly unit mean square so the
  // deterministic signal power matches the power-level shortcut.
  Eigen::VectorXd source(frame_length);
  if (cfg.signal_type == SignalType::narrowband) {
    // Band-limited surrogate: random tones in 200-800 Hz.
    constexpr int n_tones = 32;
    std::uniform_real_distribution<double> freq(200.0, 800.0);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    source.setZero();
    for (int m = 0; m < n_tones; ++m) {
      const double f = freq(source_engine);
      const double p = phase(source_engine);
      for (int l = 0; l < frame_length; ++l) {
        source[l] += std::sin(kTwoPi * f * l / cfg.sample_rate + p);
      }
    }
  } else {
    for (int l = 0; l < frame_length; ++l) {
      source[l] = unit(source_engine);
    }
  }
  const double rms = std::sqrt(source.squaredNorm() / frame_length);
  if (rms == 0.0) {
    throw_error(ErrorCode::invalid_input, "degenerate source waveform");
  }
  source /= rms;

  const double amplitude_scale = std::sqrt(power_scale(cfg.signal_type));
  SignalFrame frame;
  frame.sample_rate = cfg.sample_rate;
  frame.samples.resize(array.n_mics, frame_length);
  for (int n = 0; n < array.n_mics; ++n) {
    const double signal_power = cfg.alpha * array.gains[n] *
                                array.patterns[static_cast<size_t>(n)](psi.radians());
    const double amplitude = amplitude_scale * std::sqrt(std::max(0.0, signal_power));
    RandomEngine mic_engine = make_engine(sub_seed(seed, 13, static_cast<uint64_t>(n)));
    const double sigma = std::sqrt(array.sigma2[n]);
    for (int l = 0; l < frame_length; ++l) {
      frame.samples(n, l) = amplitude * source[l] + sigma * unit(mic_engine);
    }
  }
  return frame;
}

BenchmarkReport run_benchmark(const GroundTruthArray& array, const ScenarioConfig& cfg,
                              const DirectivityModel& model, int trials,
                              const BenchmarkOptions& options) {
  array.validate();
  cfg.validate();
  model.validate();
  if (trials < 1) {
    throw_error(ErrorCode::invalid_input, "benchmark needs at least one trial");
  }
  if (cfg.validation_angles.empty()) {
    throw_error(ErrorCode::invalid_input, "benchmark needs validation angles");
  }
  if (options.histogram_bins < 1) {
    throw_error(ErrorCode::invalid_input, "histogram needs at least one bin");
  }

  const ModelSnr model_snr = snr_from_model(model);
  const SnrSpec bench_snr{cfg.alpha > 0.0 ? cfg.alpha : model_snr.snr.alpha,
                          model_snr.snr.lambda};

  BenchmarkReport report;
  report.seed = cfg.seed;
  report.trials_per_angle = trials;

  for (size_t s = 0; s < options.signal_types.size(); ++s) {
    const SignalType type = options.signal_types[s];
    ScenarioConfig local = cfg;
    local.signal_type = type;

    SignalSummary summary;
    summary.signal = type;
    std::vector<std::vector<double>> errors_per_angle(cfg.validation_angles.size());
    double pooled_square = 0.0;
    int pooled_count = 0;

    for (size_t a = 0; a < cfg.validation_angles.size(); ++a) {
      const Angle truth = cfg.validation_angles[a];
      for (int t = 0; t < trials; ++t) {
        TrialRecord row;
        row.signal = type;
        row.angle_deg = truth.degrees();
        row.trial = t;
        const uint64_t seed = sub_seed(sub_seed(cfg.seed, kBenchStream, s), a, t);
        try {
          const PowerVector obs = generate_observation(array, truth, local, seed);
          const DoaEstimate est = ::powerdoa::estimate(model, obs, options.estimate);
          row.psi_hat_deg = est.psi_hat.degrees();
          const double err = angular_error(est.psi_hat, truth);
          row.error_deg = err * 180.0 / kPi;
          errors_per_angle[a].push_back(err);
          pooled_square += err * err;
          ++pooled_count;
        } catch (const Error& e) {
          row.failed = true;
          row.failure = error_code_name(e.code());
          ++summary.n_failed;
        }
        report.trials.push_back(std::move(row));
      }
    }

    double max_abs_err = 0.0;
    for (const auto& errors : errors_per_angle) {
      for (double e : errors) max_abs_err = std::max(max_abs_err, std::abs(e));
    }
    summary.hist_range_deg = std::max(max_abs_err * 180.0 / kPi, 1e-6);

    for (size_t a = 0; a < cfg.validation_angles.size(); ++a) {
      const std::vector<double>& errors = errors_per_angle[a];
      AngleStats stats;
      stats.angle = cfg.validation_angles[a];
      stats.n_trials = trials;
      stats.n_failed = trials - static_cast<int>(errors.size());
      stats.histogram.assign(static_cast<size_t>(options.histogram_bins), 0);
      if (!errors.empty()) {
        double sum = 0.0, sq = 0.0;
        for (double e : errors) {
          sum += e;
          sq += e * e;
        }
        stats.mean_error_rad = sum / errors.size();
        stats.mse_rad2 = sq / errors.size();
        stats.rmse_rad = std::sqrt(stats.mse_rad2);
        const double range = summary.hist_range_deg * kPi / 180.0;
        for (double e : errors) {
          int bin = static_cast<int>(std::floor((e + range) / (2.0 * range) *
                                                options.histogram_bins));
          bin = std::clamp(bin, 0, options.histogram_bins - 1);
          ++stats.histogram[static_cast<size_t>(bin)];
        }
      }
      stats.crlb_rad2 = crlb(model, cfg.validation_angles[a], bench_snr);
      summary.per_angle.push_back(std::move(stats));
    }

    summary.rmse_deg =
        pooled_count > 0 ? std::sqrt(pooled_square / pooled_count) * 180.0 / kPi : 0.0;
    report.signals.push_back(std::move(summary));
  }
  return report;
}

}  // namespace powerdoa
