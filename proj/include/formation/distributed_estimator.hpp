#pragma once

// Per-follower estimate of the leader's posture and velocities built only from
// the follower's neighbors (and the leader, for followers linked to it).
//
// Posture:   e_ip = a_i0 (P_ir - P_r) + sum_j a_ij (P_ir - P_jr)
//            P_ir' = (-k_i e_ip + sum_j a_ij P_jr' + a_i0 P_r') / xi_i
// Velocity:  e_iv = a_i0 (v_ir - v_r) + sum_j a_ij (v_ir - v_jr)
//            v_ir' = -k_a1 e_iv - k_b1 sat(e_iv)        (omega analogous)
//
// P_ir' depends on the neighbors' P_jr' at the same instant. The delayed mode
// breaks the loop with the neighbors' previous-tick rates; the implicit mode
// solves (H (x) I3) P' = -blockdiag(k_i) e_p + a (x) P_r' for all followers.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "formation/common.hpp"
#include "formation/leader_reference.hpp"
#include "formation/topology.hpp"

namespace formation {

enum class EstimatorMode { delayed, implicit };

struct EstimatorState {
  Eigen::Vector3d p_ir = Eigen::Vector3d::Zero();
  Eigen::Vector3d p_ir_dot = Eigen::Vector3d::Zero();  // last computed rate, shared with neighbors
  double v_ir = 0.0;
  double omega_ir = 0.0;
};

struct EstimatorGains {
  Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
  double k_a1 = 20.0;
  double k_b1 = 5.0;
  double k_a2 = 20.0;
  double k_b2 = 5.0;

  /// k symmetric positive definite, scalar gains positive, switching gains above
  /// the leader's acceleration bounds.
  void validate(const AccelerationBounds& iota) const {
    if (!k.isApprox(k.transpose(), 1e-12)) throw ConfigError("estimator.k", "matrix must be symmetric");
    Eigen::LLT<Eigen::Matrix3d> llt(k);
    if (llt.info() != Eigen::Success) throw ConfigError("estimator.k", "matrix must be positive definite");
    if (!(k_a1 > 0.0)) throw ConfigError("estimator.k_a1", "must be positive");
    if (!(k_a2 > 0.0)) throw ConfigError("estimator.k_a2", "must be positive");
    if (!(k_b1 > 0.0)) throw ConfigError("estimator.k_b1", "must be positive");
    if (!(k_b2 > 0.0)) throw ConfigError("estimator.k_b2", "must be positive");
    if (k_b1 < iota.iota_linear)
      throw ConfigError("estimator.k_b1", "must be at least the leader's linear acceleration bound " +
                                              std::to_string(iota.iota_linear));
    if (k_b2 < iota.iota_angular)
      throw ConfigError("estimator.k_b2", "must be at least the leader's angular acceleration bound " +
                                              std::to_string(iota.iota_angular));
  }

  double lambda_min_k() const {
    return Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(k, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  }
};

/// What the leader transmits to the followers linked to it.
struct LeaderBroadcast {
  Eigen::Vector3d posture = Eigen::Vector3d::Zero();
  Eigen::Vector3d posture_rate = Eigen::Vector3d::Zero();
  double v = 0.0;
  double omega = 0.0;

  static LeaderBroadcast from(const LeaderState& s) { return {s.posture(), s.posture_rate(), s.v_r, s.omega_r}; }
};

struct NeighborEstimate {
  std::size_t index = 0;
  EstimatorState state;
};

/// Everything follower i may read during one tick.
struct NeighborSnapshot {
  std::vector<NeighborEstimate> neighbors;
  std::optional<LeaderBroadcast> leader;
};

/// Follower i's row of the topology.
struct NodeLinks {
  std::vector<std::size_t> neighbors;
  bool hears_leader = false;

  static NodeLinks of(const Topology& topo, std::size_t i) { return {topo.neighbors(i), topo.hears_leader(i)}; }
  double degree() const { return static_cast<double>(neighbors.size()) + (hears_leader ? 1.0 : 0.0); }
};

/// Builds the snapshot follower i is allowed to see from the global tick-start state.
inline NeighborSnapshot take_snapshot(const std::vector<EstimatorState>& states, const LeaderBroadcast& leader,
                                      const NodeLinks& links) {
  NeighborSnapshot snap;
  for (std::size_t j : links.neighbors) snap.neighbors.push_back({j, states[j]});
  if (links.hears_leader) snap.leader = leader;
  return snap;
}

inline constexpr double saturation(double x) { return std::clamp(x, -1.0, 1.0); }

namespace detail {

inline void check_links(const NeighborSnapshot& snap, const NodeLinks& links) {
  if (links.degree() == 0.0) throw ConfigError("topology", "estimator undefined for isolated follower");
  if (snap.neighbors.size() != links.neighbors.size() || snap.leader.has_value() != links.hears_leader)
    throw ConfigError("topology", "snapshot does not match the follower's topology row");
  for (std::size_t k = 0; k < links.neighbors.size(); ++k)
    if (snap.neighbors[k].index != links.neighbors[k])
      throw ConfigError("topology", "snapshot does not match the follower's topology row");
}

inline Eigen::Vector3d posture_diff(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return {a.x() - b.x(), a.y() - b.y(), angle_diff(a.z(), b.z())};
}

}  // namespace detail

inline Eigen::Vector3d posture_error(const NeighborSnapshot& snap, const EstimatorState& own, const NodeLinks& links) {
  detail::check_links(snap, links);
  Eigen::Vector3d e = Eigen::Vector3d::Zero();
  if (snap.leader) e += detail::posture_diff(own.p_ir, snap.leader->posture);
  for (const auto& nb : snap.neighbors) e += detail::posture_diff(own.p_ir, nb.state.p_ir);
  return e;
}

/// Posture rate with the neighbors' rates taken from the snapshot (previous tick).
inline Eigen::Vector3d posture_rate_delayed(const EstimatorState& own, const NeighborSnapshot& snap,
                                            const EstimatorGains& gains, const NodeLinks& links) {
  const Eigen::Vector3d e = posture_error(snap, own, links);
  Eigen::Vector3d rhs = -gains.k * e;
  for (const auto& nb : snap.neighbors) rhs += nb.state.p_ir_dot;
  if (snap.leader) rhs += snap.leader->posture_rate;
  return rhs / links.degree();
}

/// Euler step of the posture estimate with a given rate; the rate is cached for neighbors.
inline EstimatorState apply_posture_rate(const EstimatorState& own, const Eigen::Vector3d& rate, double dt) {
  EstimatorState next = own;
  next.p_ir_dot = rate;
  next.p_ir += dt * rate;
  next.p_ir.z() = wrap_angle(next.p_ir.z());
  return next;
}

/// Delayed-mode posture update for one follower.
inline EstimatorState posture_step(const EstimatorState& own, const NeighborSnapshot& snap,
                                   const EstimatorGains& gains, const NodeLinks& links, double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt", "time step must be positive");
  return apply_posture_rate(own, posture_rate_delayed(own, snap, gains, links), dt);
}

/// All followers' posture rates from the coupled system, solved exactly.
inline std::vector<Eigen::Vector3d> posture_rates_implicit(const std::vector<EstimatorState>& states,
                                                           const LeaderBroadcast& leader, const Topology& topo,
                                                           const std::vector<EstimatorGains>& gains) {
  const GraphMatrices gm = build_matrices(topo);
  const auto n = static_cast<Eigen::Index>(states.size());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gm.h_matrix);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= kEigenZeroTolerance)
    throw NumericalError("implicit estimator: H matrix is singular");

  Eigen::MatrixXd rhs(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const NodeLinks links = NodeLinks::of(topo, idx);
    const NeighborSnapshot snap = take_snapshot(states, leader, links);
    Eigen::Vector3d r = -gains[idx].k * posture_error(snap, states[idx], links);
    if (links.hears_leader) r += leader.posture_rate;
    rhs.row(i) = r.transpose();
  }
  const Eigen::MatrixXd sol = ldlt.solve(rhs);
  std::vector<Eigen::Vector3d> out(states.size());
  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = sol.row(i).transpose();
  return out;
}

struct VelocityRates {
  double e_v = 0.0;
  double e_omega = 0.0;
  double v_dot = 0.0;
  double omega_dot = 0.0;
};

inline VelocityRates velocity_rates(const EstimatorState& own, const NeighborSnapshot& snap,
                                    const EstimatorGains& gains, const NodeLinks& links) {
  detail::check_links(snap, links);
  VelocityRates r;
  if (snap.leader) {
    r.e_v += own.v_ir - snap.leader->v;
    r.e_omega += own.omega_ir - snap.leader->omega;
  }
  for (const auto& nb : snap.neighbors) {
    r.e_v += own.v_ir - nb.state.v_ir;
    r.e_omega += own.omega_ir - nb.state.omega_ir;
  }
  r.v_dot = -gains.k_a1 * r.e_v - gains.k_b1 * saturation(r.e_v);
  r.omega_dot = -gains.k_a2 * r.e_omega - gains.k_b2 * saturation(r.e_omega);
  return r;
}

inline EstimatorState velocity_step(const EstimatorState& own, const NeighborSnapshot& snap,
                                    const EstimatorGains& gains, const NodeLinks& links, double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt", "time step must be positive");
  const VelocityRates r = velocity_rates(own, snap, gains, links);
  EstimatorState next = own;
  next.v_ir += dt * r.v_dot;
  next.omega_ir += dt * r.omega_dot;
  return next;
}

/// Stacked posture errors against the true leader, e_q = [P_ir - P_r]_i.
inline Eigen::VectorXd stacked_leader_error(const std::vector<EstimatorState>& states, const Eigen::Vector3d& leader) {
  Eigen::VectorXd eq(3 * static_cast<Eigen::Index>(states.size()));
  for (std::size_t i = 0; i < states.size(); ++i)
    eq.segment<3>(3 * static_cast<Eigen::Index>(i)) = detail::posture_diff(states[i].p_ir, leader);
  return eq;
}

}  // namespace formation
