#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "formation/neurodynamics.hpp"

using namespace formation;

TEST(Shunting, EquilibriumValues) {
  const ShuntingParams p{4.0, 2.0, 2.0};
  EXPECT_DOUBLE_EQ(shunting_equilibrium(p, 1.0), 0.4);
  EXPECT_DOUBLE_EQ(shunting_equilibrium(p, -4.0), -1.0);
  EXPECT_DOUBLE_EQ(shunting_equilibrium(p, 0.0), 0.0);
  EXPECT_NEAR(shunting_rate(shunting_equilibrium(p, 2.5), p, 2.5), 0.0, 1e-15);
}

TEST(Shunting, ExactStepFromRest) {
  // V(t) = target (1 - exp(-(A + |e|) t)) for constant input.
  const ShuntingParams p{4.0, 6.0, 6.0};
  const ShuntingState s = shunting_step({}, p, 2.0, 0.1);
  EXPECT_NEAR(s.v_s, 2.0 * (1.0 - std::exp(-0.6)), 1e-15);
}

TEST(Shunting, BoundedAndLinearIdentityOnRandomCases) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> gain(0.1, 10.0), input(-100.0, 100.0), step(1e-4, 1.0), unit(0.0, 1.0);
  for (int k = 0; k < 100000; ++k) {
    const ShuntingParams p{gain(rng), gain(rng), gain(rng)};
    const double v0 = -p.lower + unit(rng) * (p.upper + p.lower);
    const double e = input(rng);
    const ShuntingState s = shunting_step({v0}, p, e, step(rng));
    ASSERT_GE(s.v_s, -p.lower);
    ASSERT_LE(s.v_s, p.upper);
    // -e + f(e) - g(e) = 0 for every input.
    ASSERT_EQ(-e + f_pos(e) - g_neg(e), 0.0);
    // With B = D the weighted form -B e + B f(e) - D g(e) also vanishes.
    ASSERT_NEAR(-p.upper * e + p.upper * f_pos(e) - p.upper * g_neg(e), 0.0, 1e-12);
    // The decay factor stays non-positive.
    ASSERT_LE(-p.decay - f_pos(e) - g_neg(e), 0.0);
  }
}

TEST(Shunting, ExactStepMatchesFineEulerReference) {
  const ShuntingParams p{4.0, 2.0, 2.0};
  const double dt = 0.01, fine = dt / 100.0;
  ShuntingState exact;
  double euler = 0.0;
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double t = k * dt;
    const double e = 3.0 * std::sin(1.3 * t) + 0.5 * std::cos(4.0 * t);  // held over the step
    exact = shunting_step(exact, p, e, dt);
    for (int j = 0; j < 100; ++j) euler += fine * shunting_rate(euler, p, e);
    worst = std::max(worst, std::abs(exact.v_s - euler));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Shunting, RejectsNonPositiveStep) { EXPECT_THROW(shunting_step({}, ShuntingParams{}, 1.0, 0.0), ConfigError); }
