#pragma once

// Kinematic (velocity command) and dynamic (wheel torque) control laws.

#include <algorithm>
#include <cmath>
#include <optional>

#include "formation/common.hpp"
#include "formation/distributed_estimator.hpp"
#include "formation/neurodynamics.hpp"
#include "formation/vehicle.hpp"

namespace formation {

struct FormationOffset {
  double dx = 0.0;
  double dy = 0.0;
};

struct TrackingError {
  double e_x = 0.0;
  double e_y = 0.0;
  double e_theta = 0.0;
  double x_hat = 0.0;  // driving direction
  double y_hat = 0.0;  // lateral
  double theta_hat = 0.0;
  double omega_x = 0.0;
  double omega_y = 0.0;
};

struct VelocityCommand {
  double v_c = 0.0;
  double omega_c = 0.0;
  double v_c_dot = 0.0;
  double omega_c_dot = 0.0;
};

struct KinematicGains {
  double c1 = 3.0;
  double c2 = 2.0;
  double c3 = 1.0;

  bool valid() const { return c1 > 0.0 && c2 > 0.0 && c3 > 0.0; }
};

struct DynamicGains {
  double c_a = 3.0;
  double c_b = 3.0;
  ShuntingParams linear{4.0, 6.0, 6.0};
  ShuntingParams angular{4.0, 6.0, 6.0};

  bool valid() const { return c_a > 0.0 && c_b > 0.0 && linear.valid() && angular.valid(); }

  /// Sufficient robustness condition (C/B) * B^2 >= psi for each channel.
  bool covers(double psi_linear, double psi_angular) const {
    return c_a / linear.upper * linear.upper * linear.upper >= psi_linear &&
           c_b / angular.upper * angular.upper * angular.upper >= psi_angular;
  }
};

/// Errors of the follower against its station (estimated leader posture plus
/// offset), taken as station minus follower, then rotated into the follower's
/// body frame. With this orientation the body-frame errors obey
///   x_hat' =  omega y_hat - v + v_ir cos(theta_hat) + Omega_x
///   y_hat' = -omega x_hat     + v_ir sin(theta_hat) + Omega_y
///   theta_hat' = omega_ir - omega
/// which is the form the backstepping laws stabilize. Omega collects the gap
/// between the estimator's rate and the unicycle motion at (v_ir, theta_ir).
inline TrackingError tracking_error(const RobotState& robot, const EstimatorState& est,
                                    const FormationOffset& offset) {
  TrackingError t;
  t.e_x = est.p_ir.x() + offset.dx - robot.x;
  t.e_y = est.p_ir.y() + offset.dy - robot.y;
  t.e_theta = angle_diff(est.p_ir.z(), robot.theta);

  const double c = std::cos(robot.theta);
  const double s = std::sin(robot.theta);
  t.x_hat = c * t.e_x + s * t.e_y;
  t.y_hat = -s * t.e_x + c * t.e_y;
  t.theta_hat = t.e_theta;

  const double sy = est.p_ir_dot.y() - est.v_ir * std::sin(est.p_ir.z());
  const double sx = est.p_ir_dot.x() - est.v_ir * std::cos(est.p_ir.z());
  t.omega_x = sy * s + sx * c;
  t.omega_y = sy * c - sx * s;
  return t;
}

namespace detail {

inline VelocityCommand backstepping(double driving_term, const TrackingError& err, const EstimatorState& est,
                                    const KinematicGains& g) {
  VelocityCommand cmd;
  cmd.v_c = g.c1 * driving_term + est.v_ir * std::cos(err.theta_hat);
  cmd.omega_c = est.omega_ir + g.c2 * est.v_ir * err.y_hat + g.c3 * est.v_ir * std::sin(err.theta_hat);
  return cmd;
}

}  // namespace detail

/// Proportional driving term C1 * x_hat: jumps whenever x_hat(0) != 0.
inline VelocityCommand backstepping_conventional(const TrackingError& err, const EstimatorState& est,
                                                 const KinematicGains& gains) {
  return detail::backstepping(err.x_hat, err, est, gains);
}

/// Driving term C1 * V_s, where V_s is the shunting output driven by x_hat.
inline VelocityCommand backstepping_bioinspired(const TrackingError& err, const EstimatorState& est,
                                                const KinematicGains& gains, const ShuntingState& shunt) {
  return detail::backstepping(shunt.v_s, err, est, gains);
}

/// Linear and angular velocity tracking errors, command minus (filtered) velocity.
struct VelocityError {
  double e_eta1 = 0.0;
  double e_eta2 = 0.0;
};

struct CommandRate {
  double v_c_dot = 0.0;
  double omega_c_dot = 0.0;
};

namespace detail {

/// tau_{L,R} = (m r / 2) lin -/+ (I r / 2c) ang
inline TorquePair torques(const VehicleParams& p, double lin, double ang) {
  const double a = p.mass * p.wheel_radius / 2.0 * lin;
  const double b = p.inertia * p.wheel_radius / (2.0 * p.half_axle) * ang;
  return {a - b, a + b};
}

}  // namespace detail

inline TorquePair smc_conventional(const VelocityError& err, const CommandRate& rate, const VehicleParams& params,
                                   const DynamicGains& gains) {
  return detail::torques(params, rate.v_c_dot + gains.c_a * sign0(err.e_eta1),
                         rate.omega_c_dot + gains.c_b * sign0(err.e_eta2));
}

/// Switching terms replaced by the two shunting outputs (already advanced by the caller).
inline TorquePair smc_bioinspired(const VelocityError& /*err*/, const CommandRate& rate, const VehicleParams& params,
                                  const DynamicGains& gains, const ShuntingState& linear, const ShuntingState& angular) {
  return detail::torques(params, rate.v_c_dot + gains.c_a * linear.v_s, rate.omega_c_dot + gains.c_b * angular.v_s);
}

/// Super-twisting baseline gains (not part of the bioinspired design).
struct SuperTwistingGains {
  double k1 = 2.0;
  double k2 = 1.0;

  bool valid() const { return k1 > 0.0 && k2 > 0.0; }
};

/// Integral terms of the two super-twisting channels.
struct SuperTwistingState {
  double z_linear = 0.0;
  double z_angular = 0.0;
};

struct SuperTwistingOutput {
  TorquePair torque;
  SuperTwistingState next;
};

/// u = k1 sqrt|e| sign(e) + z,  z' = k2 sign(e), per channel; the integral is
/// advanced after the output is formed.
inline SuperTwistingOutput smc_super_twisting(const VelocityError& err, const CommandRate& rate,
                                              const VehicleParams& params, const SuperTwistingGains& gains,
                                              const SuperTwistingState& state, double dt) {
  const double u1 = gains.k1 * std::sqrt(std::abs(err.e_eta1)) * sign0(err.e_eta1) + state.z_linear;
  const double u2 = gains.k1 * std::sqrt(std::abs(err.e_eta2)) * sign0(err.e_eta2) + state.z_angular;
  SuperTwistingOutput out;
  out.torque = detail::torques(params, rate.v_c_dot + u1, rate.omega_c_dot + u2);
  out.next.z_linear = state.z_linear + dt * gains.k2 * sign0(err.e_eta1);
  out.next.z_angular = state.z_angular + dt * gains.k2 * sign0(err.e_eta2);
  return out;
}

inline constexpr double kCommandRateLimit = 50.0;

/// Clamped backward difference; zero on the first tick.
inline CommandRate command_derivative(const std::optional<VelocityCommand>& prev, const VelocityCommand& curr,
                                      double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt", "time step must be positive");
  if (!prev) return {};
  return {std::clamp((curr.v_c - prev->v_c) / dt, -kCommandRateLimit, kCommandRateLimit),
          std::clamp((curr.omega_c - prev->omega_c) / dt, -kCommandRateLimit, kCommandRateLimit)};
}

}  // namespace formation
