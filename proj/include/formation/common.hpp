#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace formation {

/// Raised when a scenario or an input violates a documented precondition.
/// `field` carries the dotted config path when one applies.
class ConfigError : public std::invalid_argument {
public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

/// Raised when a simulation produces a non-finite value or a singular system.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kPi = std::numbers::pi;

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::fmod(a + kPi, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  w -= kPi;
  return w == -kPi ? kPi : w;
}

/// Shortest signed arc from b to a.
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

/// sign with sign(0) = 0.
inline double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline bool all_finite(std::initializer_list<double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace formation
