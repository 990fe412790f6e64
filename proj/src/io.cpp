#include "powerdoa/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "json.hpp"

namespace powerdoa::io {

namespace {

using nlohmann::json;

[[noreturn]] void io_fail(const std::filesystem::path& path, const std::string& what) {
  throw_error(ErrorCode::io, path.string() + ": " + what);
}

double parse_double(std::string_view token, const std::filesystem::path& path) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    io_fail(path, "cannot parse number '" + std::string(token) + "'");
  }
  return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r') {
    fields.back().pop_back();
  }
  return fields;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    io_fail(path, "cannot open for reading");
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      lines.push_back(line);
    }
  }
  return lines;
}

json parse_json_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json parsed = json::parse(text, nullptr, false);
  if (parsed.is_discarded()) {
    io_fail(path, "invalid JSON");
  }
  return parsed;
}

// Strict-object contract: unknown keys are configuration bugs, not extras.
void check_keys(const json& object, std::initializer_list<const char*> allowed,
                const std::string& context) {
  if (!object.is_object()) {
    throw_error(ErrorCode::io, context + ": expected a JSON object");
  }
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (const char* name : allowed) {
      if (key == name) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw_error(ErrorCode::io, context + ": unknown key '" + key + "'");
    }
  }
}

const json& require(const json& object, const char* key, const std::string& context) {
  const auto it = object.find(key);
  if (it == object.end()) {
    throw_error(ErrorCode::io, context + ": missing key '" + std::string(key) + "'");
  }
  return *it;
}

Eigen::VectorXd vector_from_json(const json& array, const std::string& context) {
  if (!array.is_array()) {
    throw_error(ErrorCode::io, context + ": expected an array of numbers");
  }
  Eigen::VectorXd out(array.size());
  for (size_t i = 0; i < array.size(); ++i) {
    if (!array[i].is_number()) {
      throw_error(ErrorCode::io, context + ": expected an array of numbers");
    }
    out[static_cast<Eigen::Index>(i)] = array[i].get<double>();
  }
  return out;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(v[i]);
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      io_fail(tmp, "cannot open for writing");
    }
    out << contents;
    if (!out.flush()) {
      io_fail(tmp, "write failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    io_fail(path, "rename failed: " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    io_fail(path, "cannot open for reading");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

SignalFrame load_frame_csv(const std::filesystem::path& path, double sample_rate) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.size() < 2) {
    io_fail(path, "need a header and at least one sample row");
  }
  const std::vector<std::string> header = split_csv_line(lines[0]);
  const int n_mics = static_cast<int>(header.size());
  for (int n = 0; n < n_mics; ++n) {
    const std::string expected = "mic_" + std::to_string(n + 1);
    if (header[static_cast<size_t>(n)] != expected) {
      io_fail(path, "bad header column '" + header[static_cast<size_t>(n)] + "', expected '" +
                        expected + "'");
    }
  }
  const int n_samples = static_cast<int>(lines.size()) - 1;
  SignalFrame frame;
  frame.sample_rate = sample_rate;
  frame.samples.resize(n_mics, n_samples);
  for (int l = 0; l < n_samples; ++l) {
    const std::vector<std::string> fields = split_csv_line(lines[static_cast<size_t>(l) + 1]);
    if (static_cast<int>(fields.size()) != n_mics) {
      io_fail(path, "row " + std::to_string(l + 2) + " has wrong column count");
    }
    for (int n = 0; n < n_mics; ++n) {
      frame.samples(n, l) = parse_double(fields[static_cast<size_t>(n)], path);
    }
  }
  frame.validate();
  return frame;
}

void save_frame_csv(const std::filesystem::path& path, const SignalFrame& frame) {
  frame.validate();
  std::ostringstream out;
  for (int n = 0; n < frame.n_mics(); ++n) {
    out << (n ? "," : "") << "mic_" << n + 1;
  }
  out << "\n";
  for (int l = 0; l < frame.n_samples(); ++l) {
    for (int n = 0; n < frame.n_mics(); ++n) {
      out << (n ? "," : "") << format_double(frame.samples(n, l));
    }
    out << "\n";
  }
  write_file_atomic(path, out.str());
}

PowerVector load_power_json(const std::filesystem::path& path) {
  const json parsed = parse_json_file(path);
  check_keys(parsed, {"power", "frame_length"}, path.string());
  PowerVector out;
  out.power = vector_from_json(require(parsed, "power", path.string()), path.string());
  out.frame_length = require(parsed, "frame_length", path.string()).get<int>();
  out.validate();
  return out;
}

std::string power_to_json(const PowerVector& power) {
  json out;
  out["power"] = vector_to_json(power.power);
  out["frame_length"] = power.frame_length;
  return out.dump(2) + "\n";
}

void save_power_json(const std::filesystem::path& path, const PowerVector& power) {
  power.validate();
  write_file_atomic(path, power_to_json(power));
}

void save_training_csv(const std::filesystem::path& path, const TrainingSet& set) {
  set.validate();
  std::ostringstream out;
  out << "angle_deg";
  for (int n = 0; n < set.n_mics(); ++n) {
    out << ",P_" << n + 1;
  }
  out << "\n";
  for (int k = 0; k < set.n_angles(); ++k) {
    out << format_double(set.angles[static_cast<size_t>(k)].degrees());
    for (int n = 0; n < set.n_mics(); ++n) {
      out << "," << format_double(set.powers[static_cast<size_t>(k)].power[n]);
    }
    out << "\n";
  }
  write_file_atomic(path, out.str());
}

std::string sidecar_to_json(const TrainingSet& set) {
  json out;
  out["sigma2"] = vector_to_json(set.noise.sigma2);
  out["frame_length"] = set.noise.frame_length;
  json facing = json::array();
  for (const Angle& a : set.facing_angles) {
    facing.push_back(a.degrees());
  }
  out["facing_angles_deg"] = facing;
  return out.dump(2) + "\n";
}

void save_sidecar_json(const std::filesystem::path& path, const TrainingSet& set) {
  write_file_atomic(path, sidecar_to_json(set));
}

TrainingSet load_training_set(const std::filesystem::path& csv_path,
                              const std::filesystem::path& sidecar_path) {
  const json sidecar = parse_json_file(sidecar_path);
  check_keys(sidecar, {"sigma2", "frame_length", "facing_angles_deg"}, sidecar_path.string());
  TrainingSet set;
  set.noise.sigma2 =
      vector_from_json(require(sidecar, "sigma2", sidecar_path.string()), sidecar_path.string());
  set.noise.frame_length = require(sidecar, "frame_length", sidecar_path.string()).get<int>();
  const json& facing = require(sidecar, "facing_angles_deg", sidecar_path.string());
  if (!facing.is_array()) {
    io_fail(sidecar_path, "facing_angles_deg must be an array");
  }
  for (const json& value : facing) {
    set.facing_angles.push_back(Angle::from_degrees(value.get<double>()));
  }

  const std::vector<std::string> lines = read_lines(csv_path);
  if (lines.size() < 2) {
    io_fail(csv_path, "need a header and at least one data row");
  }
  const std::vector<std::string> header = split_csv_line(lines[0]);
  const int n_mics = static_cast<int>(header.size()) - 1;
  if (n_mics < 1 || header[0] != "angle_deg") {
    io_fail(csv_path, "header must be angle_deg,P_1,...,P_N");
  }
  for (int n = 0; n < n_mics; ++n) {
    if (header[static_cast<size_t>(n) + 1] != "P_" + std::to_string(n + 1)) {
      io_fail(csv_path, "bad power column header '" + header[static_cast<size_t>(n) + 1] + "'");
    }
  }
  for (size_t k = 1; k < lines.size(); ++k) {
    const std::vector<std::string> fields = split_csv_line(lines[k]);
    if (static_cast<int>(fields.size()) != n_mics + 1) {
      io_fail(csv_path, "row " + std::to_string(k + 1) + " has wrong column count");
    }
    set.angles.push_back(Angle::from_degrees(parse_double(fields[0], csv_path)));
    PowerVector p;
    p.frame_length = set.noise.frame_length;
    p.power.resize(n_mics);
    for (int n = 0; n < n_mics; ++n) {
      p.power[n] = parse_double(fields[static_cast<size_t>(n) + 1], csv_path);
    }
    set.powers.push_back(std::move(p));
  }
  set.validate();
  return set;
}

std::string model_to_json(const DirectivityModel& model) {
  json out;
  out["format_version"] = 1;
  out["order"] = model.order;
  out["alpha"] = model.alpha;
  out["gains"] = vector_to_json(model.gains);
  json theta = json::array();
  for (const MicDirectivity& mic : model.mics) {
    theta.push_back(vector_to_json(mic.theta));
  }
  out["theta"] = theta;
  out["sigma2"] = vector_to_json(model.noise.sigma2);
  out["frame_length"] = model.noise.frame_length;
  json facing = json::array();
  for (const Angle& a : model.facing_angles) {
    facing.push_back(a.degrees());
  }
  out["facing_angles_deg"] = facing;
  return out.dump(2) + "\n";
}

DirectivityModel model_from_json(const std::string& text) {
  json parsed = json::parse(text, nullptr, false);
  if (parsed.is_discarded()) {
    throw_error(ErrorCode::io, "model: invalid JSON");
  }
  const std::string context = "model";
  check_keys(parsed,
             {"format_version", "order", "alpha", "gains", "theta", "sigma2", "frame_length",
              "facing_angles_deg"},
             context);
  if (require(parsed, "format_version", context).get<int>() != 1) {
    throw_error(ErrorCode::io, "model: unsupported format_version");
  }
  DirectivityModel model;
  model.order = require(parsed, "order", context).get<int>();
  model.alpha = require(parsed, "alpha", context).get<double>();
  model.gains = vector_from_json(require(parsed, "gains", context), context);
  const json& theta = require(parsed, "theta", context);
  if (!theta.is_array()) {
    throw_error(ErrorCode::io, "model: theta must be an array of arrays");
  }
  for (const json& row : theta) {
    model.mics.push_back(MicDirectivity{vector_from_json(row, context)});
  }
  model.noise.sigma2 = vector_from_json(require(parsed, "sigma2", context), context);
  model.noise.frame_length = require(parsed, "frame_length", context).get<int>();
  for (const json& value : require(parsed, "facing_angles_deg", context)) {
    model.facing_angles.push_back(Angle::from_degrees(value.get<double>()));
  }
  model.validate();
  return model;
}

void save_model_json(const std::filesystem::path& path, const DirectivityModel& model) {
  model.validate();
  write_file_atomic(path, model_to_json(model));
}

DirectivityModel load_model_json(const std::filesystem::path& path) {
  try {
    return model_from_json(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::io) {
      throw_error(ErrorCode::io, path.string() + ": " + e.what());
    }
    throw;
  }
}

std::string fit_report_to_json(const FitReport& report) {
  json out;
  out["loss"] = report.loss;
  out["iterations"] = report.iterations;
  out["converged"] = report.converged;
  out["bic"] = report.bic;
  json residuals;
  residuals["gain_norm"] = report.constraint_residuals.gain_norm;
  residuals["peak"] = report.constraint_residuals.peak;
  residuals["gain_floor"] = report.constraint_residuals.gain_floor;
  residuals["alpha_floor"] = report.constraint_residuals.alpha_floor;
  out["constraint_residuals"] = residuals;
  out["uninformative_mics"] = report.uninformative_mics;
  return out.dump(2) + "\n";
}

void save_fit_report_json(const std::filesystem::path& path, const FitReport& report) {
  write_file_atomic(path, fit_report_to_json(report));
}

std::string estimate_to_json(const DoaEstimate& estimate) {
  json out;
  out["psi_hat_deg"] = estimate.psi_hat.degrees();
  out["residual"] = estimate.residual;
  out["grid_resolution_rad"] = estimate.grid_resolution;
  out["refined"] = estimate.refined;
  return out.dump(2) + "\n";
}

void save_estimate_json(const std::filesystem::path& path, const DoaEstimate& estimate) {
  write_file_atomic(path, estimate_to_json(estimate));
}

std::string crlb_curve_to_csv(const CrlbCurve& curve) {
  const std::vector<double> deg2 = curve.values_deg2();
  std::ostringstream out;
  out << "angle_deg,crlb_deg2,degenerate\n";
  for (size_t i = 0; i < curve.angles.size(); ++i) {
    out << format_double(curve.angles[i].degrees()) << ",";
    if (curve.degenerate_mask[i]) {
      out << "nan,1\n";
    } else {
      out << format_double(deg2[i]) << ",0\n";
    }
  }
  return out.str();
}

void save_crlb_curve_csv(const std::filesystem::path& path, const CrlbCurve& curve) {
  write_file_atomic(path, crlb_curve_to_csv(curve));
}

std::string benchmark_report_to_json(const BenchmarkReport& report) {
  const double rad2deg = 180.0 / kPi;
  json out;
  out["seed"] = report.seed;
  out["trials_per_angle"] = report.trials_per_angle;
  json signals = json::array();
  for (const SignalSummary& summary : report.signals) {
    json s;
    s["signal"] = signal_type_name(summary.signal);
    s["rmse_deg"] = summary.rmse_deg;
    s["n_failed"] = summary.n_failed;
    s["hist_range_deg"] = summary.hist_range_deg;
    json angles = json::array();
    for (const AngleStats& stats : summary.per_angle) {
      json a;
      a["angle_deg"] = stats.angle.degrees();
      a["n_trials"] = stats.n_trials;
      a["n_failed"] = stats.n_failed;
      a["mean_error_deg"] = stats.mean_error_rad * rad2deg;
      a["rmse_deg"] = stats.rmse_rad * rad2deg;
      a["mse_deg2"] = stats.mse_rad2 * rad2deg * rad2deg;
      if (stats.crlb_rad2) {
        a["crlb_deg2"] = *stats.crlb_rad2 * rad2deg * rad2deg;
      } else {
        a["crlb_deg2"] = nullptr;
      }
      a["histogram"] = stats.histogram;
      angles.push_back(std::move(a));
    }
    s["per_angle"] = std::move(angles);
    signals.push_back(std::move(s));
  }
  out["signals"] = std::move(signals);
  return out.dump(2) + "\n";
}

std::string benchmark_trials_to_csv(const BenchmarkReport& report) {
  std::ostringstream out;
  out << "signal,angle_deg,trial,psi_hat_deg,error_deg\n";
  for (const TrialRecord& row : report.trials) {
    out << signal_type_name(row.signal) << "," << format_double(row.angle_deg) << ","
        << row.trial << ",";
    if (row.failed) {
      out << "nan,nan\n";
    } else {
      out << format_double(row.psi_hat_deg) << "," << format_double(row.error_deg) << "\n";
    }
  }
  return out.str();
}

std::string benchmark_summary_to_csv(const BenchmarkReport& report) {
  std::ostringstream out;
  out << "signal,rmse_deg,n_failed,n_trials\n";
  for (const SignalSummary& summary : report.signals) {
    const int total = report.trials_per_angle * static_cast<int>(summary.per_angle.size());
    out << signal_type_name(summary.signal) << "," << format_double(summary.rmse_deg) << ","
        << summary.n_failed << "," << total << "\n";
  }
  return out.str();
}

void save_benchmark_outputs(const std::filesystem::path& prefix, const BenchmarkReport& report) {
  write_file_atomic(prefix.string() + "_report.json", benchmark_report_to_json(report));
  write_file_atomic(prefix.string() + "_trials.csv", benchmark_trials_to_csv(report));
  write_file_atomic(prefix.string() + "_summary.csv", benchmark_summary_to_csv(report));
}

}  // namespace powerdoa::io
