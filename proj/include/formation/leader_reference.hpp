#pragma once

// Virtual leader: analytic reference paths, the velocities they imply, and the
// soft-start ramp on the linear speed.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "formation/common.hpp"
#include "formation/vehicle.hpp"

namespace formation {

enum class PathKind { paper_sine, circle, line, waypoint_spline, stationary };

struct Waypoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

struct ReferencePath {
  PathKind kind = PathKind::paper_sine;
  double ramp_tau = 0.5;  // s

  // circle: center, radius, speed. line: origin, heading, speed.
  // stationary: origin, heading.
  double center_x = 0.0;
  double center_y = 0.0;
  double radius = 5.0;
  double speed = 1.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double heading = 0.0;

  std::vector<Waypoint> waypoints;  // waypoint_spline knots, strictly increasing t
};

/// Position and time derivatives of a path at one instant. d3 is absent when
/// the path has no usable third derivative.
struct PathSample {
  Eigen::Vector2d pos = Eigen::Vector2d::Zero();
  Eigen::Vector2d d1 = Eigen::Vector2d::Zero();
  Eigen::Vector2d d2 = Eigen::Vector2d::Zero();
  std::optional<Eigen::Vector2d> d3;
};

namespace detail {

/// Natural cubic spline through (t_k, y_k); linear extrapolation past the ends.
class NaturalCubicSpline {
public:
  NaturalCubicSpline(std::vector<double> t, std::vector<double> y) : t_(std::move(t)), y_(std::move(y)) {
    const std::size_t n = t_.size();
    m_.assign(n, 0.0);
    if (n < 3) return;
    // Thomas algorithm on the second-derivative system with m_0 = m_{n-1} = 0.
    std::vector<double> sub(n, 0.0), diag(n, 1.0), sup(n, 0.0), rhs(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = t_[i] - t_[i - 1];
      const double h1 = t_[i + 1] - t_[i];
      sub[i] = h0;
      diag[i] = 2.0 * (h0 + h1);
      sup[i] = h1;
      rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    }
    for (std::size_t i = 1; i < n; ++i) {
      const double w = sub[i] / diag[i - 1];
      diag[i] -= w * sup[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    m_[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) m_[i] = (rhs[i] - sup[i] * m_[i + 1]) / diag[i];
  }

  /// (value, first derivative, second derivative)
  std::array<double, 3> eval(double t) const {
    const std::size_t n = t_.size();
    if (t <= t_.front()) {
      const auto [v, d, dd] = segment(0, t_.front());
      return {v + d * (t - t_.front()), d, 0.0};
    }
    if (t >= t_.back()) {
      const auto [v, d, dd] = segment(n - 2, t_.back());
      return {v + d * (t - t_.back()), d, 0.0};
    }
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    return segment(static_cast<std::size_t>(it - t_.begin()) - 1, t);
  }

private:
  std::array<double, 3> segment(std::size_t i, double t) const {
    const double h = t_[i + 1] - t_[i];
    const double a = (t_[i + 1] - t) / h;
    const double b = (t - t_[i]) / h;
    const double v = a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
    const double d = (y_[i + 1] - y_[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * m_[i] +
                     (3.0 * b * b - 1.0) / 6.0 * h * m_[i + 1];
    const double dd = a * m_[i] + b * m_[i + 1];
    return {v, d, dd};
  }

  std::vector<double> t_, y_, m_;
};

}  // namespace detail

inline void validate_path(const ReferencePath& path) {
  if (!(path.ramp_tau > 0.0)) throw ConfigError("path.ramp_tau", "must be positive");
  switch (path.kind) {
    case PathKind::circle:
      if (!(path.radius > 0.0)) throw ConfigError("path.radius", "must be positive");
      if (!(path.speed > 0.0)) throw ConfigError("path.speed", "must be positive");
      break;
    case PathKind::line:
      if (!(path.speed > 0.0)) throw ConfigError("path.speed", "must be positive");
      break;
    case PathKind::waypoint_spline:
      if (path.waypoints.size() < 2) throw ConfigError("path.waypoints", "need at least two waypoints");
      for (std::size_t i = 1; i < path.waypoints.size(); ++i)
        if (!(path.waypoints[i].t > path.waypoints[i - 1].t))
          throw ConfigError("path.waypoints", "times must be strictly increasing");
      break;
    default:
      break;
  }
}

inline PathSample sample_path(const ReferencePath& path, double t) {
  PathSample s;
  switch (path.kind) {
    case PathKind::paper_sine: {
      // x = t, y = 2 + sin(pi/2 + t) = 2 + cos t
      s.pos = {t, 2.0 + std::sin(kPi / 2.0 + t)};
      s.d1 = {1.0, std::cos(kPi / 2.0 + t)};
      s.d2 = {0.0, -std::sin(kPi / 2.0 + t)};
      s.d3 = Eigen::Vector2d(0.0, -std::cos(kPi / 2.0 + t));
      break;
    }
    case PathKind::circle: {
      const double w = path.speed / path.radius;
      const double phi = w * t;
      s.pos = {path.center_x + path.radius * std::sin(phi), path.center_y - path.radius * std::cos(phi)};
      s.d1 = {path.speed * std::cos(phi), path.speed * std::sin(phi)};
      s.d2 = {-path.speed * w * std::sin(phi), path.speed * w * std::cos(phi)};
      s.d3 = Eigen::Vector2d(-path.speed * w * w * std::cos(phi), -path.speed * w * w * std::sin(phi));
      break;
    }
    case PathKind::line: {
      const Eigen::Vector2d dir(std::cos(path.heading), std::sin(path.heading));
      s.pos = Eigen::Vector2d(path.origin_x, path.origin_y) + path.speed * t * dir;
      s.d1 = path.speed * dir;
      s.d3 = Eigen::Vector2d::Zero();
      break;
    }
    case PathKind::waypoint_spline: {
      std::vector<double> ts, xs, ys;
      for (const auto& w : path.waypoints) {
        ts.push_back(w.t);
        xs.push_back(w.x);
        ys.push_back(w.y);
      }
      const auto ex = detail::NaturalCubicSpline(ts, xs).eval(t);
      const auto ey = detail::NaturalCubicSpline(std::move(ts), ys).eval(t);
      s.pos = {ex[0], ey[0]};
      s.d1 = {ex[1], ey[1]};
      s.d2 = {ex[2], ey[2]};
      break;
    }
    case PathKind::stationary:
      s.pos = {path.origin_x, path.origin_y};
      s.d3 = Eigen::Vector2d::Zero();
      break;
  }
  return s;
}

struct DesiredVelocities {
  double v = 0.0;
  double omega = 0.0;
};

inline constexpr double kSingularSpeedSquared = 1e-12;

/// v_d = |p'|, omega_d = (y'' x' - x'' y') / |p'|^2. A stationary path yields zeros.
inline DesiredVelocities desired_velocities(const ReferencePath& path, double t) {
  if (path.kind == PathKind::stationary) return {};
  const PathSample s = sample_path(path, t);
  const double sq = s.d1.squaredNorm();
  if (sq < kSingularSpeedSquared) throw NumericalError("singular path point at t=" + std::to_string(t));
  return {std::sqrt(sq), (s.d2.y() * s.d1.x() - s.d2.x() * s.d1.y()) / sq};
}

struct LeaderState {
  double x_r = 0.0;
  double y_r = 0.0;
  double theta_r = 0.0;
  double v_r = 0.0;
  double omega_r = 0.0;
  double v_r_dot = 0.0;
  double omega_r_dot = 0.0;

  Eigen::Vector3d posture() const { return {x_r, y_r, theta_r}; }
  Eigen::Vector3d posture_rate() const { return {v_r * std::cos(theta_r), v_r * std::sin(theta_r), omega_r}; }
};

namespace detail {

inline double ramp(const ReferencePath& path, double t) { return 1.0 - std::exp(-t / path.ramp_tau); }

/// Ramped velocities at t. Derivatives are analytic when the path carries a third
/// derivative; otherwise they are left unset for the caller to difference.
inline void fill_velocities(LeaderState& s, const ReferencePath& path, double t, bool& analytic) {
  analytic = true;
  if (path.kind == PathKind::stationary) {
    s.v_r = s.omega_r = s.v_r_dot = s.omega_r_dot = 0.0;
    return;
  }
  const PathSample ps = sample_path(path, t);
  const DesiredVelocities dv = desired_velocities(path, t);
  const double g = ramp(path, t);
  s.v_r = dv.v * g;
  s.omega_r = dv.omega;
  if (!ps.d3) {
    analytic = false;
    return;
  }
  const double sq = ps.d1.squaredNorm();
  const double dot12 = ps.d1.dot(ps.d2);
  const double vd_dot = dot12 / dv.v;
  const double num = ps.d2.y() * ps.d1.x() - ps.d2.x() * ps.d1.y();
  const double num_dot = ps.d3->y() * ps.d1.x() - ps.d3->x() * ps.d1.y();
  s.v_r_dot = vd_dot * g + dv.v * std::exp(-t / path.ramp_tau) / path.ramp_tau;
  s.omega_r_dot = (num_dot * sq - num * 2.0 * dot12) / (sq * sq);
}

}  // namespace detail

/// Leader at t = 0: on the path, heading along its tangent, ramp speed zero.
inline LeaderState initial_leader(const ReferencePath& path) {
  validate_path(path);
  LeaderState s;
  const PathSample ps = sample_path(path, 0.0);
  s.x_r = ps.pos.x();
  s.y_r = ps.pos.y();
  s.theta_r = path.kind == PathKind::stationary ? wrap_angle(path.heading)
                                                : std::atan2(ps.d1.y(), ps.d1.x());
  bool analytic = true;
  detail::fill_velocities(s, path, 0.0, analytic);
  if (!analytic) s.v_r_dot = s.omega_r_dot = 0.0;
  return s;
}

/// Leader at t + dt from the leader at t: pose by Euler with the velocities held
/// at t, then velocities re-evaluated at t + dt. Non-analytic paths get backward
/// differences.
inline LeaderState advance_leader(const LeaderState& state, const ReferencePath& path, double t, double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt", "time step must be positive");
  const Pose next = kinematics_step({state.x_r, state.y_r, state.theta_r}, state.v_r, state.omega_r, dt);
  LeaderState s;
  s.x_r = next.x;
  s.y_r = next.y;
  s.theta_r = next.theta;
  bool analytic = true;
  detail::fill_velocities(s, path, t + dt, analytic);
  if (!analytic) {
    s.v_r_dot = (s.v_r - state.v_r) / dt;
    s.omega_r_dot = (s.omega_r - state.omega_r) / dt;
  }
  return s;
}

struct AccelerationBounds {
  double iota_linear = 0.0;
  double iota_angular = 0.0;
};

/// Largest |v_r_dot|, |omega_r_dot| seen by stepping the leader over [0, t_end].
inline AccelerationBounds leader_acceleration_bounds(const ReferencePath& path, double t_end, double dt) {
  AccelerationBounds b;
  LeaderState s = initial_leader(path);
  const auto steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  for (long k = 0;; ++k) {
    b.iota_linear = std::max(b.iota_linear, std::abs(s.v_r_dot));
    b.iota_angular = std::max(b.iota_angular, std::abs(s.omega_r_dot));
    if (k >= steps) break;
    s = advance_leader(s, path, static_cast<double>(k) * dt, dt);
  }
  return b;
}

}  // namespace formation
