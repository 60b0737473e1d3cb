#pragma once

// Differential-drive ground truth: unicycle kinematics and torque-driven
// body-velocity dynamics with the center of mass at the body-frame origin
// (no Coriolis term).

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "formation/common.hpp"

namespace formation {

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

struct RobotState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double v = 0.0;
  double omega = 0.0;

  Pose pose() const { return {x, y, theta}; }
};

struct VehicleParams {
  double mass = 10.0;         // kg
  double inertia = 5.0;       // kg m^2
  double wheel_radius = 0.1;  // m
  double half_axle = 0.25;    // m

  bool valid() const { return mass > 0.0 && inertia > 0.0 && wheel_radius > 0.0 && half_axle > 0.0; }

  /// M^-1 B: maps (tau_left, tau_right) to (v_dot, omega_dot).
  Eigen::Matrix2d input_map() const {
    Eigen::Matrix2d m;
    m << 1.0 / (mass * wheel_radius), 1.0 / (mass * wheel_radius),
        -half_axle / (inertia * wheel_radius), half_axle / (inertia * wheel_radius);
    return m;
  }
};

struct TorquePair {
  double tau_left = 0.0;
  double tau_right = 0.0;

  Eigen::Vector2d vec() const { return {tau_left, tau_right}; }
};

/// Linear force and yaw moment acting on the body, (N, N m).
struct Disturbance {
  double linear = 0.0;
  double angular = 0.0;
};

enum class Waveform { zero, constant, sinusoid };

struct DisturbanceModel {
  double bound_linear = 0.0;   // psi_1
  double bound_angular = 0.0;  // psi_2
  Waveform waveform = Waveform::zero;
  double amplitude = 0.0;
  double frequency = 0.0;  // Hz
  double phase = 0.0;      // rad
};

/// Bounded by construction: every waveform is clipped to (psi_1, psi_2).
inline Disturbance sample_disturbance(const DisturbanceModel& model, double t) {
  switch (model.waveform) {
    case Waveform::zero:
      return {};
    case Waveform::constant:
      return {model.bound_linear, model.bound_angular};
    case Waveform::sinusoid: {
      const double arg = 2.0 * kPi * model.frequency * t + model.phase;
      return {std::clamp(model.amplitude * std::sin(arg), -model.bound_linear, model.bound_linear),
              std::clamp(model.amplitude * std::cos(arg), -model.bound_angular, model.bound_angular)};
    }
  }
  return {};
}

/// Euler step of the unicycle kinematics; theta wrapped.
inline Pose kinematics_step(const Pose& p, double v, double omega, double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt", "time step must be positive");
  return {p.x + dt * v * std::cos(p.theta), p.y + dt * v * std::sin(p.theta),
          wrap_angle(p.theta + dt * omega)};
}

/// Classical RK4 on the same kinematics with constant (v, omega); only used as a
/// higher-order reference in tests.
inline Pose kinematics_step_rk4(const Pose& p, double v, double omega, double dt) {
  auto f = [&](double th) { return Eigen::Vector3d(v * std::cos(th), v * std::sin(th), omega); };
  const Eigen::Vector3d k1 = f(p.theta);
  const Eigen::Vector3d k2 = f(p.theta + 0.5 * dt * k1.z());
  const Eigen::Vector3d k3 = f(p.theta + 0.5 * dt * k2.z());
  const Eigen::Vector3d k4 = f(p.theta + dt * k3.z());
  const Eigen::Vector3d d = dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return {p.x + d.x(), p.y + d.y(), wrap_angle(p.theta + d.z())};
}

/// One explicit Euler step of  M xi_dot = B tau + tau_d  together with the pose
/// (pose uses pre-step velocities).
inline RobotState dynamics_step(const RobotState& s, const TorquePair& tau, const VehicleParams& params,
                                const Disturbance& d, double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt", "time step must be positive");
  if (!params.valid()) throw ConfigError("vehicle", "parameters must be strictly positive");
  if (!all_finite({s.x, s.y, s.theta, s.v, s.omega, tau.tau_left, tau.tau_right, d.linear, d.angular}))
    throw NumericalError("dynamics_step: non-finite input");

  const double r = params.wheel_radius;
  const double v_dot = (tau.tau_left + tau.tau_right) / (params.mass * r) + d.linear / params.mass;
  const double w_dot =
      params.half_axle * (tau.tau_right - tau.tau_left) / (params.inertia * r) + d.angular / params.inertia;

  const Pose next = kinematics_step(s.pose(), s.v, s.omega, dt);
  return {next.x, next.y, next.theta, s.v + dt * v_dot, s.omega + dt * w_dot};
}

}  // namespace formation
