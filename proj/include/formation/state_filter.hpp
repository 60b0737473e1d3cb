#pragma once

// Body-velocity filters on the Euler-discretized dynamics
//
//   zeta_{k+1} = A_h zeta_k + B_h tau_k,   B_h = M^-1 B dt,   y = H zeta
//
// with three correctors: Kalman (KF), sliding innovation with a fixed boundary
// layer (SIF) and sliding innovation with an adaptive boundary layer (ASIF).
// All three share the predictor and the Joseph-form covariance update.

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "formation/common.hpp"
#include "formation/vehicle.hpp"

namespace formation {

enum class FilterKind { none, kf, sif, asif };

struct FilterModel {
  Eigen::Matrix2d a_h = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d b_h = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d h = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d q = 1e-4 * Eigen::Matrix2d::Identity();
  Eigen::Matrix2d r = 1e-4 * Eigen::Matrix2d::Identity();

  // The model the filter believes in; the scales are fault multipliers on it.
  VehicleParams nominal;
  double dt = 0.01;
  double believed_mass_scale = 1.0;
  double believed_inertia_scale = 1.0;

  /// B_h from the believed mass and inertia.
  void rebuild_input_matrix() {
    VehicleParams believed = nominal;
    believed.mass *= believed_mass_scale;
    believed.inertia *= believed_inertia_scale;
    b_h = believed.input_map() * dt;
  }

  static FilterModel make(const VehicleParams& nominal, double dt, const Eigen::Vector2d& q_diag,
                          const Eigen::Vector2d& r_diag) {
    FilterModel m;
    m.nominal = nominal;
    m.dt = dt;
    m.q = q_diag.asDiagonal();
    m.r = r_diag.asDiagonal();
    m.rebuild_input_matrix();
    return m;
  }

  void validate() const {
    auto spd = [](const Eigen::Matrix2d& m) {
      return m.isApprox(m.transpose(), 1e-12) && Eigen::LLT<Eigen::Matrix2d>(m).info() == Eigen::Success;
    };
    if (!spd(q)) throw ConfigError("filter.q", "must be symmetric positive definite");
    if (!spd(r)) throw ConfigError("filter.r", "must be symmetric positive definite");
    if (!b_h.allFinite()) throw ConfigError("filter", "input matrix is not finite");
  }
};

struct FilterState {
  Eigen::Vector2d zeta = Eigen::Vector2d::Zero();  // (v, omega)
  Eigen::Matrix2d p = Eigen::Matrix2d::Identity() * 1e-4;
};

struct InnovationRecord {
  Eigen::Vector2d z = Eigen::Vector2d::Zero();
  Eigen::Matrix2d s = Eigen::Matrix2d::Zero();
  Eigen::Vector2d rho = Eigen::Vector2d::Zero();
  Eigen::Matrix2d gain = Eigen::Matrix2d::Zero();
};

struct FilterUpdate {
  FilterState state;
  InnovationRecord innovation;
};

inline FilterState predict(const FilterState& fs, const FilterModel& model, const TorquePair& torque) {
  FilterState out;
  out.zeta = model.a_h * fs.zeta + model.b_h * torque.vec();
  out.p = model.a_h * fs.p * model.a_h.transpose() + model.q;
  return out;
}

namespace detail {

inline FilterUpdate correct(const FilterState& prior, const FilterModel& model, const Eigen::Vector2d& z,
                            const Eigen::Matrix2d& s, const Eigen::Matrix2d& k, const Eigen::Vector2d& rho) {
  FilterUpdate u;
  u.innovation = {z, s, rho, k};
  u.state.zeta = prior.zeta + k * z;
  const Eigen::Matrix2d ikh = Eigen::Matrix2d::Identity() - k * model.h;
  const Eigen::Matrix2d p = ikh * prior.p * ikh.transpose() + k * model.r * k.transpose();
  u.state.p = 0.5 * (p + p.transpose());
  return u;
}

inline Eigen::Matrix2d h_pinv(const FilterModel& model) {
  return model.h.completeOrthogonalDecomposition().pseudoInverse();
}

}  // namespace detail

inline FilterUpdate update_kf(const FilterState& prior, const FilterModel& model, const Eigen::Vector2d& measurement) {
  const Eigen::Vector2d z = measurement - model.h * prior.zeta;
  const Eigen::Matrix2d s = model.h * prior.p * model.h.transpose() + model.r;
  Eigen::FullPivLU<Eigen::Matrix2d> lu(s);
  if (!lu.isInvertible()) throw NumericalError("update_kf: innovation covariance is singular");
  const Eigen::Matrix2d k = prior.p * model.h.transpose() * lu.inverse();
  return detail::correct(prior, model, z, s, k, Eigen::Vector2d::Zero());
}

/// K = H^+ diag(sat(|z_j| / rho_j)) with a fixed boundary layer.
inline FilterUpdate update_sif(const FilterState& prior, const FilterModel& model, const Eigen::Vector2d& measurement,
                               const Eigen::Vector2d& rho_fixed) {
  if (!(rho_fixed.minCoeff() > 0.0)) throw ConfigError("filter.rho_fixed", "components must be positive");
  const Eigen::Vector2d z = measurement - model.h * prior.zeta;
  const Eigen::Matrix2d s = model.h * prior.p * model.h.transpose() + model.r;
  Eigen::Vector2d g;
  for (int j = 0; j < 2; ++j) g(j) = std::min(std::abs(z(j)) / rho_fixed(j), 1.0);
  const Eigen::Matrix2d k = detail::h_pinv(model) * g.asDiagonal();
  return detail::correct(prior, model, z, s, k, rho_fixed);
}

inline constexpr double kAsifRegularization = 1e-9;
inline constexpr double kAsifRhoFloor = 1e-9;

/// Adaptive boundary layer rho = S (S - R)^-1 |z|, gain K = H^+ diag(|z_j| / rho_j)
/// clamped to [0, 1]. (S - R) is inverted as H P H^T + eps I.
///
/// With `rho_cap`, each layer component is limited to the cap: inside the cap the
/// gain is the adaptive one, beyond it the gain is the fixed-layer SIF gain
/// sat(|z_j| / cap_j), which is larger. Without a cap and with a diagonal
/// covariance this update coincides with the Kalman update.
inline FilterUpdate update_asif(const FilterState& prior, const FilterModel& model, const Eigen::Vector2d& measurement,
                                const std::optional<Eigen::Vector2d>& rho_cap = std::nullopt) {
  const Eigen::Vector2d z = measurement - model.h * prior.zeta;
  const Eigen::Matrix2d hph = model.h * prior.p * model.h.transpose();
  const Eigen::Matrix2d s = hph + model.r;
  const Eigen::Matrix2d s_minus_r = hph + kAsifRegularization * Eigen::Matrix2d::Identity();
  Eigen::Vector2d rho = s * s_minus_r.inverse() * z.cwiseAbs();
  Eigen::Vector2d g;
  for (int j = 0; j < 2; ++j) {
    rho(j) = std::max(rho(j), kAsifRhoFloor);
    if (rho_cap) rho(j) = std::min(rho(j), (*rho_cap)(j));
    g(j) = std::clamp(std::abs(z(j)) / rho(j), 0.0, 1.0);
  }
  const Eigen::Matrix2d k = detail::h_pinv(model) * g.asDiagonal();
  return detail::correct(prior, model, z, s, k, rho);
}

struct FaultSchedule {
  bool enabled = false;
  double t_fault = 10.0;
  double mass_scale = 0.01;
  double inertia_scale = 0.1;
};

/// Believed model at time t: from t_fault on, B_h is rebuilt with the scaled
/// mass and inertia. The true vehicle is untouched.
inline FilterModel apply_fault(const FilterModel& model, const FaultSchedule& schedule, double t) {
  if (!schedule.enabled || t < schedule.t_fault) return model;
  FilterModel out = model;
  out.believed_mass_scale = schedule.mass_scale;
  out.believed_inertia_scale = schedule.inertia_scale;
  out.rebuild_input_matrix();
  return out;
}

}  // namespace formation
