#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "powerdoa/error.hpp"

namespace powerdoa {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Wraps an arbitrary angle into the canonical interval (-pi, pi].
inline double wrap_angle(double radians) {
  double v = std::remainder(radians, kTwoPi);
  if (v <= -kPi) v += kTwoPi;
  return v + 0.0;  // flushes -0.0 to +0.0
}

// An azimuth angle, stored canonically in (-pi, pi]. Constructors wrap, so
// angular arithmetic elsewhere never has to.
class Angle {
 public:
  Angle() : value_(0.0) {}

  explicit Angle(double radians) {
    if (!std::isfinite(radians)) {
      throw_error(ErrorCode::invalid_input, "angle must be finite");
    }
    value_ = wrap_angle(radians);
  }

  static Angle from_degrees(double degrees) { return Angle(degrees * kPi / 180.0); }

  double radians() const { return value_; }
  double degrees() const { return value_ * 180.0 / kPi; }

  friend bool operator==(const Angle& a, const Angle& b) { return a.value_ == b.value_; }

 private:
  double value_;
};

// Wrapped signed difference a - b in (-pi, pi].
inline double angular_error(const Angle& a, const Angle& b) {
  return wrap_angle(a.radians() - b.radians());
}

// Uniform grid of `count` angles covering (-pi, pi], endpoint included.
inline std::vector<Angle> uniform_angle_grid(int count) {
  if (count < 1) {
    throw_error(ErrorCode::invalid_input, "angle grid needs at least one point");
  }
  std::vector<Angle> grid;
  grid.reserve(static_cast<size_t>(count));
  const double step = kTwoPi / count;
  for (int i = 0; i < count; ++i) {
    grid.emplace_back(-kPi + step * (i + 1));
  }
  return grid;
}

}  // namespace powerdoa
