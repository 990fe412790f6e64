#pragma once

#include <filesystem>
#include <string>

#include "powerdoa/crlb.hpp"
#include "powerdoa/estimator.hpp"
#include "powerdoa/scene.hpp"
#include "powerdoa/training.hpp"

namespace powerdoa::io {

// Shortest-round-trip decimal form of a double, locale-independent.
std::string format_double(double value);

// Writes via a temp file in the same directory, then renames into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string read_file(const std::filesystem::path& path);

// --- signal frames: CSV, header mic_1..mic_N, one row per sample ---
SignalFrame load_frame_csv(const std::filesystem::path& path, double sample_rate);
void save_frame_csv(const std::filesystem::path& path, const SignalFrame& frame);

// --- power vectors: {"power": [...], "frame_length": L} ---
PowerVector load_power_json(const std::filesystem::path& path);
std::string power_to_json(const PowerVector& power);
void save_power_json(const std::filesystem::path& path, const PowerVector& power);

// --- training data: CSV angle_deg,P_1..P_N plus a JSON noise sidecar ---
void save_training_csv(const std::filesystem::path& path, const TrainingSet& set);
std::string sidecar_to_json(const TrainingSet& set);
void save_sidecar_json(const std::filesystem::path& path, const TrainingSet& set);
TrainingSet load_training_set(const std::filesystem::path& csv_path,
                              const std::filesystem::path& sidecar_path);

// --- models ---
std::string model_to_json(const DirectivityModel& model);
DirectivityModel model_from_json(const std::string& text);
void save_model_json(const std::filesystem::path& path, const DirectivityModel& model);
DirectivityModel load_model_json(const std::filesystem::path& path);

// --- fit reports ---
std::string fit_report_to_json(const FitReport& report);
void save_fit_report_json(const std::filesystem::path& path, const FitReport& report);

// --- estimates ---
std::string estimate_to_json(const DoaEstimate& estimate);
void save_estimate_json(const std::filesystem::path& path, const DoaEstimate& estimate);

// --- CRLB curves: CSV angle_deg,crlb_deg2,degenerate ---
std::string crlb_curve_to_csv(const CrlbCurve& curve);
void save_crlb_curve_csv(const std::filesystem::path& path, const CrlbCurve& curve);

// --- benchmark outputs ---
std::string benchmark_report_to_json(const BenchmarkReport& report);
std::string benchmark_trials_to_csv(const BenchmarkReport& report);
std::string benchmark_summary_to_csv(const BenchmarkReport& report);
void save_benchmark_outputs(const std::filesystem::path& prefix, const BenchmarkReport& report);

}  // namespace powerdoa::io
