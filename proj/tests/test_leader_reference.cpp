#include <gtest/gtest.h>

#include <cmath>

#include "formation/leader_reference.hpp"

using namespace formation;

TEST(LeaderReference, SinePathInitialState) {
  const LeaderState s = initial_leader(ReferencePath{});
  EXPECT_DOUBLE_EQ(s.x_r, 0.0);
  EXPECT_DOUBLE_EQ(s.y_r, 3.0);
  EXPECT_NEAR(s.theta_r, 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(s.v_r, 0.0);  // the ramp starts at zero
  EXPECT_NEAR(s.omega_r, -1.0, 1e-12);
}

TEST(LeaderReference, SinePathAtOneSecond) {
  const ReferencePath path;
  const PathSample p = sample_path(path, 1.0);
  EXPECT_NEAR(p.pos.y(), 2.5403023058681398, 1e-13);
  const DesiredVelocities d = desired_velocities(path, 1.0);
  EXPECT_NEAR(d.v, 1.3069328285239343, 1e-13);
  EXPECT_NEAR(d.omega, -0.31632264754418354, 1e-13);

  LeaderState s = initial_leader(path);
  for (int k = 0; k < 100; ++k) s = advance_leader(s, path, 0.01 * k, 0.01);
  EXPECT_NEAR(s.v_r, 1.1300587040044203, 1e-12);
  EXPECT_NEAR(s.v_r_dot, 0.6545431273652369, 1e-8);
  EXPECT_NEAR(s.omega_r_dot, 0.6610385375194205, 1e-8);
}

TEST(LeaderReference, RampIsContinuousAndSaturates) {
  ReferencePath line;
  line.kind = PathKind::line;
  line.speed = 1.0;
  LeaderState s = initial_leader(line);
  double prev = s.v_r;
  for (int k = 0; k < 1000; ++k) {
    s = advance_leader(s, line, 0.01 * k, 0.01);
    EXPECT_LE(std::abs(s.v_r - prev), 0.021);
    prev = s.v_r;
  }
  EXPECT_NEAR(s.v_r, 1.0, 1e-8);
  EXPECT_NEAR(s.omega_r, 0.0, 1e-15);
}

TEST(LeaderReference, AnalyticDerivativesMatchCentralDifference) {
  for (PathKind kind : {PathKind::paper_sine, PathKind::circle, PathKind::line}) {
    ReferencePath path;
    path.kind = kind;
    path.radius = 3.0;
    for (double t : {0.3, 1.7, 4.2}) {
      const double h = 1e-5;
      const PathSample a = sample_path(path, t - h), b = sample_path(path, t + h), c = sample_path(path, t);
      EXPECT_LT(((b.pos - a.pos) / (2 * h) - c.d1).norm(), 1e-8);
      EXPECT_LT(((b.d1 - a.d1) / (2 * h) - c.d2).norm(), 1e-8);
      ASSERT_TRUE(c.d3.has_value());
      EXPECT_LT(((b.d2 - a.d2) / (2 * h) - *c.d3).norm(), 1e-8);
    }
  }
}

TEST(LeaderReference, CircleHasConstantTurnRate) {
  ReferencePath c;
  c.kind = PathKind::circle;
  c.radius = 4.0;
  c.speed = 2.0;
  for (double t : {0.0, 1.0, 5.0}) {
    const DesiredVelocities d = desired_velocities(c, t);
    EXPECT_NEAR(d.v, 2.0, 1e-12);
    EXPECT_NEAR(d.omega, 0.5, 1e-12);
  }
}

TEST(LeaderReference, WaypointSplineMatchesNaturalSpline) {
  ReferencePath s;
  s.kind = PathKind::waypoint_spline;
  s.waypoints = {{0, 0, 0}, {1, 2, 0.5}, {2, 1, 1.0}, {4, 3, 2.0}};
  // x channel against an independent natural cubic spline.
  EXPECT_NEAR(sample_path(s, 0.5).pos.x(), 1.3260869565217392, 1e-12);
  EXPECT_NEAR(sample_path(s, 1.5).pos.x(), 1.6467391304347827, 1e-12);
  EXPECT_NEAR(sample_path(s, 3.0).pos.x(), 1.2826086956521738, 1e-12);
  EXPECT_NEAR(sample_path(s, 1.5).d1.x(), -1.3369565217391306, 1e-12);
  EXPECT_NEAR(sample_path(s, 1.0).pos.y(), 0.5, 1e-12);
}

TEST(LeaderReference, StationaryLeaderDoesNotMove) {
  ReferencePath p;
  p.kind = PathKind::stationary;
  p.origin_x = 1.0;
  p.origin_y = -2.0;
  p.heading = 0.3;
  LeaderState s = initial_leader(p);
  for (int k = 0; k < 500; ++k) s = advance_leader(s, p, 0.01 * k, 0.01);
  EXPECT_DOUBLE_EQ(s.x_r, 1.0);
  EXPECT_DOUBLE_EQ(s.y_r, -2.0);
  EXPECT_DOUBLE_EQ(s.theta_r, 0.3);
  EXPECT_DOUBLE_EQ(s.v_r, 0.0);
}

TEST(LeaderReference, InvalidPathsRejected) {
  ReferencePath p;
  p.ramp_tau = 0.0;
  EXPECT_THROW(validate_path(p), ConfigError);
  ReferencePath w;
  w.kind = PathKind::waypoint_spline;
  w.waypoints = {{0, 0, 0}, {0, 1, 1}};
  EXPECT_THROW(validate_path(w), ConfigError);
}

TEST(LeaderReference, SingularPathPointIsReported) {
  ReferencePath w;
  w.kind = PathKind::waypoint_spline;
  w.waypoints = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  EXPECT_THROW(desired_velocities(w, 1.0), NumericalError);
}

TEST(LeaderReference, AccelerationBoundsOfSinePath) {
  const AccelerationBounds b = leader_acceleration_bounds(ReferencePath{}, 30.0, 0.01);
  EXPECT_GT(b.iota_linear, 0.0);
  EXPECT_LE(b.iota_linear, 5.0);
  EXPECT_LE(b.iota_angular, 5.0);
}
