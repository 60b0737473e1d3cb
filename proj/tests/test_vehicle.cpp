#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "formation/vehicle.hpp"

using namespace formation;

TEST(Vehicle, WrapAngleRange) {
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
  EXPECT_NEAR(wrap_angle(3.0 * kPi / 2.0), -kPi / 2.0, 1e-15);
  EXPECT_NEAR(angle_diff(0.1, 2.0 * kPi - 0.1), 0.2, 1e-12);
}

TEST(Vehicle, KinematicsStraightLine) {
  const Pose p = kinematics_step({1.0, 2.0, 0.0}, 2.0, 0.0, 0.5);
  EXPECT_DOUBLE_EQ(p.x, 2.0);
  EXPECT_DOUBLE_EQ(p.y, 2.0);
  EXPECT_DOUBLE_EQ(p.theta, 0.0);
}

TEST(Vehicle, EulerConvergesToRk4FirstOrder) {
  // Integrate a constant-turn arc for 1 s; the closed form is a circle of radius v / omega.
  const double v = 1.0, w = 0.8;
  auto euler_err = [&](double dt) {
    Pose p{};
    for (int k = 0; k < static_cast<int>(std::lround(1.0 / dt)); ++k) p = kinematics_step(p, v, w, dt);
    const double x = v / w * std::sin(w), y = v / w * (1.0 - std::cos(w));
    return std::hypot(p.x - x, p.y - y);
  };
  const double e1 = euler_err(0.01), e2 = euler_err(0.005);
  EXPECT_NEAR(e1 / e2, 2.0, 0.05);

  Pose r{};
  for (int k = 0; k < 100; ++k) r = kinematics_step_rk4(r, v, w, 0.01);
  EXPECT_NEAR(r.x, v / w * std::sin(w), 1e-10);
  EXPECT_NEAR(r.y, v / w * (1.0 - std::cos(w)), 1e-10);
}

TEST(Vehicle, InputMapDecouplesSumAndDifference) {
  const VehicleParams p;
  const Eigen::Matrix2d m = p.input_map();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int k = 0; k < 1000; ++k) {
    const TorquePair t{u(rng), u(rng)};
    const Eigen::Vector2d acc = m * t.vec();
    EXPECT_NEAR(acc.x(), (t.tau_left + t.tau_right) / (p.mass * p.wheel_radius), 1e-12);
    EXPECT_NEAR(acc.y(), p.half_axle * (t.tau_right - t.tau_left) / (p.inertia * p.wheel_radius), 1e-12);
  }
}

TEST(Vehicle, DynamicsStepAppliesTorqueAndDisturbance) {
  const VehicleParams p;  // m=10, I=5, r=0.1, c=0.25
  const RobotState s{0.0, 0.0, 0.0, 1.0, 0.5};
  const RobotState n = dynamics_step(s, {1.0, 2.0}, p, {0.5, -0.25}, 0.1);
  // v_dot = 3 / 1 + 0.05 = 3.05, omega_dot = 0.25 * 1 / 0.5 - 0.05 = 0.45
  EXPECT_NEAR(n.v, 1.0 + 0.305, 1e-12);
  EXPECT_NEAR(n.omega, 0.5 + 0.045, 1e-12);
  EXPECT_NEAR(n.x, 0.1, 1e-12);  // pose uses pre-step velocities
  EXPECT_NEAR(n.theta, 0.05, 1e-12);
}

TEST(Vehicle, DynamicsRejectsBadInput) {
  const VehicleParams p;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(dynamics_step({}, {nan, 0.0}, p, {}, 0.01), NumericalError);
  EXPECT_THROW(dynamics_step({}, {}, p, {}, 0.0), ConfigError);
  VehicleParams bad;
  bad.mass = 0.0;
  EXPECT_THROW(dynamics_step({}, {}, bad, {}, 0.01), ConfigError);
}

TEST(Vehicle, DisturbanceStaysWithinBounds) {
  DisturbanceModel d{0.3, 0.2, Waveform::sinusoid, 1.0, 0.7, 0.1};
  for (int k = 0; k < 10000; ++k) {
    const Disturbance s = sample_disturbance(d, 0.001 * k);
    EXPECT_LE(std::abs(s.linear), 0.3);
    EXPECT_LE(std::abs(s.angular), 0.2);
  }
  d.waveform = Waveform::constant;
  EXPECT_DOUBLE_EQ(sample_disturbance(d, 3.0).linear, 0.3);
  d.waveform = Waveform::zero;
  EXPECT_DOUBLE_EQ(sample_disturbance(d, 3.0).angular, 0.0);
}
