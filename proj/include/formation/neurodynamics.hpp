#pragma once

// Shunting neural dynamics
//
//   V' = -A V + (B - V) f(e) - (D + V) g(e),   f(e) = max(e, 0), g(e) = max(-e, 0)
//
// For a fixed input the right-hand side is linear in V, so one step is the exact
// exponential relaxation toward (B f - D g) / (A + f + g). The output stays in
// [-D, B] for any step size.

#include <algorithm>
#include <cmath>

#include "formation/common.hpp"

namespace formation {

struct ShuntingParams {
  double decay = 4.0;  // A
  double upper = 2.0;  // B
  double lower = 2.0;  // D

  bool valid() const { return decay > 0.0 && upper > 0.0 && lower > 0.0; }
};

struct ShuntingState {
  double v_s = 0.0;
};

inline constexpr double f_pos(double e) { return e > 0.0 ? e : 0.0; }
inline constexpr double g_neg(double e) { return e < 0.0 ? -e : 0.0; }

/// Right-hand side of the shunting equation; used by reference integrators.
inline double shunting_rate(double v, const ShuntingParams& p, double e) {
  return -p.decay * v + (p.upper - v) * f_pos(e) - (p.lower + v) * g_neg(e);
}

/// Equilibrium for a constant input.
inline double shunting_equilibrium(const ShuntingParams& p, double e) {
  return (p.upper * f_pos(e) - p.lower * g_neg(e)) / (p.decay + f_pos(e) + g_neg(e));
}

inline ShuntingState shunting_step(const ShuntingState& s, const ShuntingParams& p, double e, double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt", "time step must be positive");
  const double rate = p.decay + f_pos(e) + g_neg(e);
  const double target = (p.upper * f_pos(e) - p.lower * g_neg(e)) / rate;
  const double keep = std::exp(-rate * dt);
  // Convex combination; the clamp only absorbs round-off at the bounds.
  return {std::clamp(keep * s.v_s + (1.0 - keep) * target, -p.lower, p.upper)};
}

}  // namespace formation
