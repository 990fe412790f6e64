#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "powerdoa/crlb.hpp"
#include "powerdoa/estimator.hpp"
#include "powerdoa/training.hpp"

namespace powerdoa {

// Continuous ground-truth directivity pattern (2pi-periodic, >= 0).
using PatternFn = std::function<double(double psi_radians)>;

// The physical truth a synthetic experiment measures: facing directions,
// continuous patterns, gains and noise floors.
struct GroundTruthArray {
  int n_mics = 0;
  std::vector<Angle> facing_angles;
  std::vector<PatternFn> patterns;  // peak-normalized: pattern_n(facing_n) = 1
  Eigen::VectorXd gains;            // true per-mic gains, > 0
  Eigen::VectorXd sigma2;           // true noise variances, > 0

  void validate() const;

  // Circular array, mic 0 facing 0 deg, subsequent mics stepping -360/N deg.
  // Patterns are raised-cosine cardioids (kappa + (1-kappa)(1+cos)/2)^q, each
  // modulated by a deterministic per-mic ripple made of harmonics above any
  // practical fit order. The ripple is what keeps the truth outside the
  // Fourier model class, like the lumpy patterns real housings produce;
  // without it a symmetric smooth truth hides model error almost entirely.
  static GroundTruthArray circular_cardioid(int n_mics, double kappa, double sharpness,
                                            double sigma2, double gain_variation = 0.1,
                                            double irregularity = 0.05,
                                            uint64_t pattern_seed = 1);

  // Same geometry with pattern ((1+cos)/2)^order: an exact Fourier series of
  // the given order, for matched-model experiments.
  static GroundTruthArray circular_cos_power(int n_mics, int order, double sigma2,
                                             double gain_variation = 0.1);

  // Truth taken from a trained model (no model error by construction).
  static GroundTruthArray from_model(const DirectivityModel& model);
};

enum class SignalType { wideband, attenuated, amplified, narrowband };

const char* signal_type_name(SignalType type);
SignalType signal_type_from_name(const std::string& name);

// Received-power multiplier for a signal type (amplitude scale squared).
double power_scale(SignalType type);

enum class NoiseMode { none, gaussian, chisq };

struct ScenarioConfig {
  SignalType signal_type = SignalType::wideband;
  double alpha = 1.0;  // base received power of the wideband source
  double duration_s = 1.0;
  double sample_rate = 48000.0;
  std::vector<Angle> train_angles;
  std::vector<Angle> validation_angles;
  uint64_t seed = 1;
  NoiseMode noise_mode = NoiseMode::chisq;

  int frame_length() const { return static_cast<int>(std::lround(duration_s * sample_rate)); }

  void validate() const;

  // Paper-protocol defaults: 24 training angles uniform over the circle and
  // 24 validation angles offset by half the training spacing.
  static ScenarioConfig protocol_default(uint64_t seed = 1);
};

// Training sweep at the configured angles. Training always uses the wideband
// signal; the configured signal type applies to observations. Deterministic
// given (array, cfg).
TrainingSet generate_training_set(const GroundTruthArray& array, const ScenarioConfig& cfg);

// One power observation at psi. The signal-type scale multiplies the whole
// noise-compensated power (signal plus noise fluctuation), so scaled variants
// of the same seed are exactly proportional in compensated space.
PowerVector generate_observation(const GroundTruthArray& array, const Angle& psi,
                                 const ScenarioConfig& cfg, uint64_t seed);

// Sample-level path: synthesize the actual frame (shared source waveform per
// mic plus independent sensor noise). compute_power of this frame is the
// slow-but-faithful counterpart of generate_observation.
SignalFrame synthesize_frame(const GroundTruthArray& array, const Angle& psi,
                             const ScenarioConfig& cfg, uint64_t seed);

struct BenchmarkOptions {
  std::vector<SignalType> signal_types = {SignalType::wideband, SignalType::attenuated,
                                          SignalType::amplified, SignalType::narrowband};
  EstimateConfig estimate;
  int histogram_bins = 41;
};

struct TrialRecord {
  SignalType signal;
  double angle_deg = 0.0;
  int trial = 0;
  double psi_hat_deg = 0.0;  // valid when !failed
  double error_deg = 0.0;
  bool failed = false;
  std::string failure;
};

struct AngleStats {
  Angle angle;
  int n_trials = 0;
  int n_failed = 0;
  double mean_error_rad = 0.0;
  double mse_rad2 = 0.0;
  double rmse_rad = 0.0;
  std::optional<double> crlb_rad2;
  std::vector<int> histogram;  // counts over the signal's shared bin grid
};

struct SignalSummary {
  SignalType signal;
  double rmse_deg = 0.0;  // pooled over angles
  int n_failed = 0;
  double hist_range_deg = 0.0;  // bins span [-range, range]
  std::vector<AngleStats> per_angle;
};

struct BenchmarkReport {
  uint64_t seed = 0;
  int trials_per_angle = 0;
  std::vector<SignalSummary> signals;
  std::vector<TrialRecord> trials;
};

// Monte-Carlo validation run: estimates every (signal type, validation angle,
// trial) observation against the model. Failed trials are counted, never
// dropped silently. Deterministic given (array, cfg, options, trials).
BenchmarkReport run_benchmark(const GroundTruthArray& array, const ScenarioConfig& cfg,
                              const DirectivityModel& model, int trials,
                              const BenchmarkOptions& options = {});

}  // namespace powerdoa
