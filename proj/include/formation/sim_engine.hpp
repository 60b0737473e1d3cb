#pragma once

// Fixed-step closed loop for one leader and n followers.
//
// Every tick k (t = k dt) computes, from the state at t:
//   leader broadcast -> neighbor snapshots -> estimator rates -> tracking errors
//   and velocity commands -> velocity errors and torques
// records the tick, then advances everything to t + dt:
//   true dynamics (with disturbance) -> noisy velocity measurement -> filter
//   predict/update with the believed model -> estimator and shunting states.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "formation/control.hpp"
#include "formation/distributed_estimator.hpp"
#include "formation/leader_reference.hpp"
#include "formation/neurodynamics.hpp"
#include "formation/scenario.hpp"
#include "formation/state_filter.hpp"
#include "formation/topology.hpp"
#include "formation/vehicle.hpp"

namespace formation {

struct RobotTick {
  RobotState truth;
  double v_meas = 0.0;
  double omega_meas = 0.0;
  double v_filt = 0.0;
  double omega_filt = 0.0;
  VelocityCommand command;
  TorquePair torque;
  TrackingError error;
  EstimatorState estimate;  // p_ir_dot holds the rate computed this tick
  double kinematic_shunt = 0.0;
  double linear_shunt = 0.0;
  double angular_shunt = 0.0;
};

struct TickRecord {
  double t = 0.0;
  LeaderState leader;
  std::vector<RobotTick> robots;
};

struct RobotMetrics {
  double rmse_v = 0.0;
  double rmse_omega = 0.0;
  double rmse_v_window = 0.0;
  double rmse_omega_window = 0.0;
  double max_abs_v_cmd = 0.0;
  double tv_tau_left = 0.0;
  double tv_tau_right = 0.0;
  std::optional<double> settling_x;
  std::optional<double> settling_y;
  std::optional<double> settling_theta;
};

struct MetricsReport {
  std::vector<RobotMetrics> robots;
  double window_start = 0.0;
  double window_end = 0.0;
  double lambda_min_k = 0.0;
  std::optional<double> estimator_decay_rate;
  std::string kinematic;
  std::string dynamic;
  std::string filter;
  bool non_paper_baseline = false;
};

struct RunResult {
  std::vector<TickRecord> records;
  MetricsReport metrics;
};

enum class VelocityChannel { linear, angular };
enum class Signal { tau_left, tau_right, v_cmd, omega_cmd };

struct TimeWindow {
  double start = 0.0;
  double end = std::numeric_limits<double>::infinity();
};

// ---------------------------------------------------------------------------
// metrics on records

/// RMS of (filtered - true) over ticks with t in [start, end].
inline double rmse(const std::vector<TickRecord>& records, std::size_t robot, VelocityChannel channel,
                   TimeWindow window = {}) {
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& r : records) {
    if (r.t < window.start - 1e-12 || r.t > window.end + 1e-12) continue;
    const RobotTick& rt = r.robots.at(robot);
    const double e = channel == VelocityChannel::linear ? rt.v_filt - rt.truth.v : rt.omega_filt - rt.truth.omega;
    acc += e * e;
    ++count;
  }
  if (count == 0) throw ConfigError("window", "no ticks fall inside the RMSE window");
  return std::sqrt(acc / static_cast<double>(count));
}

inline double signal_value(const RobotTick& rt, Signal s) {
  switch (s) {
    case Signal::tau_left:
      return rt.torque.tau_left;
    case Signal::tau_right:
      return rt.torque.tau_right;
    case Signal::v_cmd:
      return rt.command.v_c;
    case Signal::omega_cmd:
      return rt.command.omega_c;
  }
  return 0.0;
}

inline double total_variation(std::span<const double> xs) {
  double tv = 0.0;
  for (std::size_t k = 1; k < xs.size(); ++k) tv += std::abs(xs[k] - xs[k - 1]);
  return tv;
}

/// Sum of |signal_{k+1} - signal_k| over ticks with t in the window.
inline double total_variation(const std::vector<TickRecord>& records, std::size_t robot, Signal signal,
                              TimeWindow window = {}) {
  std::vector<double> xs;
  for (const auto& r : records)
    if (r.t >= window.start - 1e-12 && r.t <= window.end + 1e-12) xs.push_back(signal_value(r.robots.at(robot), signal));
  return total_variation(xs);
}

/// Formation errors against the true leader: (x_i - x_r - dx, y_i - y_r - dy, theta_i - theta_r).
inline Eigen::Vector3d formation_error(const TickRecord& r, std::size_t robot, const FormationOffset& offset) {
  const RobotState& s = r.robots.at(robot).truth;
  return {s.x - r.leader.x_r - offset.dx, s.y - r.leader.y_r - offset.dy, angle_diff(s.theta, r.leader.theta_r)};
}

/// Earliest time after which |component| stays below the threshold to the end.
inline std::optional<double> settling_time(const std::vector<TickRecord>& records, std::size_t robot,
                                           const FormationOffset& offset, int component, double threshold) {
  std::optional<double> since;
  for (const auto& r : records) {
    const double e = std::abs(formation_error(r, robot, offset)(component));
    if (e < threshold) {
      if (!since) since = r.t;
    } else {
      since.reset();
    }
  }
  return since;
}

/// Least-squares slope of log|e_p(t)| over t in [0, window], negated. Samples
/// below 1e-12 are ignored. Empty when fewer than two samples remain.
inline std::optional<double> estimator_decay_rate(const std::vector<TickRecord>& records, const Topology& topo,
                                                  double window) {
  const GraphMatrices gm = build_matrices(topo);
  const auto n = static_cast<Eigen::Index>(topo.size());
  std::vector<double> ts, ys;
  for (const auto& r : records) {
    if (r.t > window + 1e-12) break;
    std::vector<EstimatorState> states;
    for (const auto& rt : r.robots) states.push_back(rt.estimate);
    const Eigen::VectorXd eq = stacked_leader_error(states, r.leader.posture());
    // (H kron I3) e_q without forming the Kronecker product.
    const Eigen::MatrixXd ep = gm.h_matrix * eq.reshaped(3, n).transpose();
    const double norm = ep.norm();
    if (norm > 1e-12) {
      ts.push_back(r.t);
      ys.push_back(std::log(norm));
    }
  }
  if (ts.size() < 2) return std::nullopt;
  double mt = 0.0, my = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    mt += ts[k];
    my += ys[k];
  }
  mt /= static_cast<double>(ts.size());
  my /= static_cast<double>(ts.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    sxy += (ts[k] - mt) * (ys[k] - my);
    sxx += (ts[k] - mt) * (ts[k] - mt);
  }
  return -sxy / sxx;
}

// ---------------------------------------------------------------------------
// engine

namespace detail {

/// One generator per (robot, channel), seeded from the run seed only.
class NoiseStreams {
public:
  NoiseStreams(std::uint64_t seed, std::size_t robots, std::size_t channels) : channels_(channels) {
    for (std::size_t r = 0; r < robots; ++r)
      for (std::size_t c = 0; c < channels; ++c) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)};
        gens_.emplace_back(seq);
      }
  }

  double gaussian(std::size_t robot, std::size_t channel, double sigma) {
    if (sigma == 0.0) return 0.0;
    std::normal_distribution<double> dist(0.0, sigma);
    return dist(gens_[robot * channels_ + channel]);
  }

private:
  std::size_t channels_;
  std::vector<std::mt19937_64> gens_;
};

enum NoiseChannel : std::size_t { kMeasV, kMeasOmega, kExX, kExY, kExTheta, kExV, kExOmega, kNoiseChannels };

inline void check_finite(const RobotTick& rt, std::size_t tick, std::size_t robot) {
  const auto& s = rt.truth;
  if (!all_finite({s.x, s.y, s.theta, s.v, s.omega, rt.v_filt, rt.omega_filt, rt.command.v_c, rt.command.omega_c,
                   rt.torque.tau_left, rt.torque.tau_right, rt.estimate.p_ir.x(), rt.estimate.p_ir.y(),
                   rt.estimate.p_ir.z(), rt.estimate.v_ir, rt.estimate.omega_ir}))
    throw NumericalError("non-finite state at tick " + std::to_string(tick) + ", robot " + std::to_string(robot + 1));
}

}  // namespace detail

/// Follower pose at t = 0 that yields the configured body-frame tracking error
/// (station minus follower) against the leader's initial posture.
inline RobotState initial_follower(const LeaderState& leader, const FollowerConfig& f) {
  RobotState s;
  s.theta = wrap_angle(leader.theta_r - f.initial_error.z());
  const double c = std::cos(s.theta), sn = std::sin(s.theta);
  s.x = leader.x_r + f.offset.dx - (c * f.initial_error.x() - sn * f.initial_error.y());
  s.y = leader.y_r + f.offset.dy - (sn * f.initial_error.x() + c * f.initial_error.y());
  return s;
}

inline MetricsReport compute_metrics(const ScenarioConfig& cfg, const std::vector<TickRecord>& records) {
  MetricsReport m;
  m.window_start = cfg.fault.enabled ? cfg.fault.t_fault : 0.0;
  m.window_end = cfg.t_end;
  m.lambda_min_k = cfg.estimator.lambda_min_k();
  m.estimator_decay_rate = estimator_decay_rate(records, cfg.topology, cfg.metrics.decay_fit_window);
  m.kinematic = to_string(cfg.kinematic);
  m.dynamic = to_string(cfg.dynamic);
  m.filter = to_string(cfg.filter);
  m.non_paper_baseline = cfg.dynamic == DynamicControl::super_twisting;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    RobotMetrics rm;
    rm.rmse_v = rmse(records, i, VelocityChannel::linear);
    rm.rmse_omega = rmse(records, i, VelocityChannel::angular);
    rm.rmse_v_window = rmse(records, i, VelocityChannel::linear, {m.window_start, m.window_end});
    rm.rmse_omega_window = rmse(records, i, VelocityChannel::angular, {m.window_start, m.window_end});
    for (const auto& r : records) rm.max_abs_v_cmd = std::max(rm.max_abs_v_cmd, std::abs(r.robots[i].command.v_c));
    rm.tv_tau_left = total_variation(records, i, Signal::tau_left);
    rm.tv_tau_right = total_variation(records, i, Signal::tau_right);
    const FormationOffset& off = cfg.followers[i].offset;
    rm.settling_x = settling_time(records, i, off, 0, cfg.metrics.threshold_xy);
    rm.settling_y = settling_time(records, i, off, 1, cfg.metrics.threshold_xy);
    rm.settling_theta = settling_time(records, i, off, 2, cfg.metrics.threshold_theta);
    m.robots.push_back(rm);
  }
  return m;
}

inline RunResult run(const ScenarioConfig& cfg) {
  validate(cfg);
  const std::size_t n = cfg.size();
  const double dt = cfg.dt;
  const auto ticks = static_cast<std::size_t>(std::llround(cfg.t_end / dt));

  std::vector<NodeLinks> links;
  std::vector<EstimatorGains> gains(n, cfg.estimator);
  for (std::size_t i = 0; i < n; ++i) links.push_back(NodeLinks::of(cfg.topology, i));

  detail::NoiseStreams noise(cfg.seed, n, detail::kNoiseChannels);

  LeaderState leader = initial_leader(cfg.path);
  std::vector<RobotState> truth(n);
  std::vector<EstimatorState> est(n);
  std::vector<FilterModel> models;
  std::vector<FilterState> filt(n);
  std::vector<Eigen::Vector2d> meas(n);
  std::vector<ShuntingState> kin(n), lin(n), ang(n);
  std::vector<SuperTwistingState> st(n);
  std::vector<std::optional<VelocityCommand>> prev_cmd(n);

  for (std::size_t i = 0; i < n; ++i) {
    const FollowerConfig& f = cfg.followers[i];
    truth[i] = initial_follower(leader, f);
    // Estimate starts at the follower's nominal station minus its offset, i.e. at
    // the leader's initial posture, plus any configured estimation error.
    est[i].p_ir = leader.posture() + f.estimate_posture_error;
    est[i].p_ir.z() = wrap_angle(est[i].p_ir.z());
    est[i].v_ir = leader.v_r + f.estimate_velocity_error.x();
    est[i].omega_ir = f.estimate_velocity_error.y();
    models.push_back(FilterModel::make(f.vehicle, dt, cfg.q_diag, cfg.r_diag));
    meas[i] = {truth[i].v + noise.gaussian(i, detail::kMeasV, cfg.measurement_sigma.x()),
               truth[i].omega + noise.gaussian(i, detail::kMeasOmega, cfg.measurement_sigma.y())};
    filt[i].zeta = meas[i];
    filt[i].p = models[i].r;
  }

  RunResult result;
  result.records.reserve(ticks + 1);
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    const LeaderBroadcast broadcast = LeaderBroadcast::from(leader);

    // Published estimator states; exchange noise perturbs what neighbors read.
    std::vector<EstimatorState> published = est;
    if (cfg.exchange_noise_sigma > 0.0) {
      for (std::size_t i = 0; i < n; ++i) {
        const double s = cfg.exchange_noise_sigma;
        published[i].p_ir += Eigen::Vector3d(noise.gaussian(i, detail::kExX, s), noise.gaussian(i, detail::kExY, s),
                                             noise.gaussian(i, detail::kExTheta, s));
        published[i].v_ir += noise.gaussian(i, detail::kExV, s);
        published[i].omega_ir += noise.gaussian(i, detail::kExOmega, s);
      }
    }

    std::vector<Eigen::Vector3d> posture_rates(n);
    if (cfg.estimator_mode == EstimatorMode::implicit) {
      posture_rates = posture_rates_implicit(published, broadcast, cfg.topology, gains);
    }

    TickRecord rec;
    rec.t = t;
    rec.leader = leader;
    rec.robots.resize(n);
    std::vector<VelocityRates> vel_rates(n);

    for (std::size_t i = 0; i < n; ++i) {
      const FollowerConfig& f = cfg.followers[i];
      const NeighborSnapshot snap = take_snapshot(published, broadcast, links[i]);
      if (cfg.estimator_mode == EstimatorMode::delayed)
        posture_rates[i] = posture_rate_delayed(est[i], snap, gains[i], links[i]);
      vel_rates[i] = velocity_rates(est[i], snap, gains[i], links[i]);

      EstimatorState current = est[i];
      current.p_ir_dot = posture_rates[i];

      RobotTick& rt = rec.robots[i];
      rt.truth = truth[i];
      rt.estimate = current;
      rt.v_meas = meas[i].x();
      rt.omega_meas = meas[i].y();
      rt.v_filt = cfg.filter == FilterKind::none ? meas[i].x() : filt[i].zeta.x();
      rt.omega_filt = cfg.filter == FilterKind::none ? meas[i].y() : filt[i].zeta.y();
      rt.error = tracking_error(truth[i], current, f.offset);

      rt.kinematic_shunt = kin[i].v_s;
      VelocityCommand cmd = cfg.kinematic == KinematicControl::conventional
                                ? backstepping_conventional(rt.error, current, cfg.kinematic_gains)
                                : backstepping_bioinspired(rt.error, current, cfg.kinematic_gains, kin[i]);
      const CommandRate rate = command_derivative(prev_cmd[i], cmd, dt);
      cmd.v_c_dot = rate.v_c_dot;
      cmd.omega_c_dot = rate.omega_c_dot;
      prev_cmd[i] = cmd;
      rt.command = cmd;

      const double v_fb = cfg.filtered_feedback ? rt.v_filt : truth[i].v;
      const double w_fb = cfg.filtered_feedback ? rt.omega_filt : truth[i].omega;
      const VelocityError verr{cmd.v_c - v_fb, cmd.omega_c - w_fb};

      rt.linear_shunt = lin[i].v_s;
      rt.angular_shunt = ang[i].v_s;
      switch (cfg.dynamic) {
        case DynamicControl::conventional_smc:
          rt.torque = smc_conventional(verr, rate, f.vehicle, cfg.dynamic_gains);
          break;
        case DynamicControl::bioinspired_smc:
          rt.torque = smc_bioinspired(verr, rate, f.vehicle, cfg.dynamic_gains, lin[i], ang[i]);
          break;
        case DynamicControl::super_twisting: {
          const auto out = smc_super_twisting(verr, rate, f.vehicle, cfg.super_twisting, st[i], dt);
          rt.torque = out.torque;
          st[i] = out.next;
          break;
        }
      }
      detail::check_finite(rt, k, i);

      // Advance the per-robot states that only depend on this tick's inputs.
      kin[i] = shunting_step(kin[i], cfg.kinematic_shunting, rt.error.x_hat, dt);
      lin[i] = shunting_step(lin[i], cfg.dynamic_gains.linear, verr.e_eta1, dt);
      ang[i] = shunting_step(ang[i], cfg.dynamic_gains.angular, verr.e_eta2, dt);
    }
    result.records.push_back(std::move(rec));
    if (k == ticks) break;

    const TickRecord& now = result.records.back();
    for (std::size_t i = 0; i < n; ++i) {
      const FollowerConfig& f = cfg.followers[i];
      truth[i] = dynamics_step(truth[i], now.robots[i].torque, f.vehicle, sample_disturbance(cfg.disturbance, t), dt);
      meas[i] = {truth[i].v + noise.gaussian(i, detail::kMeasV, cfg.measurement_sigma.x()),
                 truth[i].omega + noise.gaussian(i, detail::kMeasOmega, cfg.measurement_sigma.y())};

      const FilterModel believed = apply_fault(models[i], cfg.fault, t);
      const FilterState prior = predict(filt[i], believed, now.robots[i].torque);
      switch (cfg.filter) {
        case FilterKind::none:
          filt[i].zeta = meas[i];
          break;
        case FilterKind::kf:
          filt[i] = update_kf(prior, believed, meas[i]).state;
          break;
        case FilterKind::sif:
          filt[i] = update_sif(prior, believed, meas[i], cfg.rho_fixed).state;
          break;
        case FilterKind::asif:
          filt[i] = update_asif(prior, believed, meas[i],
                                cfg.asif_cap ? std::optional<Eigen::Vector2d>(cfg.rho_fixed) : std::nullopt)
                        .state;
          break;
      }

      EstimatorState next = apply_posture_rate(est[i], posture_rates[i], dt);
      next.v_ir += dt * vel_rates[i].v_dot;
      next.omega_ir += dt * vel_rates[i].omega_dot;
      est[i] = next;
    }
    leader = advance_leader(leader, cfg.path, t, dt);
  }

  result.metrics = compute_metrics(cfg, result.records);
  return result;
}

// ---------------------------------------------------------------------------
// output

inline const char* kCsvHeader =
    "t,robot_id,x,y,theta,v_true,omega_true,v_meas,omega_meas,v_filt,omega_filt,v_cmd,omega_cmd,"
    "tau_l,tau_r,e_x,e_y,e_theta,x_hat,y_hat,theta_hat";

namespace detail {

/// Shortest round-trip decimal form.
inline void put(std::ostream& os, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  os.write(buf, res.ptr - buf);
}

}  // namespace detail

/// One row per robot per tick; the leader is robot 0 with only pose and velocity columns filled.
inline void write_csv(std::ostream& os, const std::vector<TickRecord>& records) {
  using detail::put;
  os << kCsvHeader << '\n';
  for (const auto& r : records) {
    put(os, r.t);
    os << ",0,";
    put(os, r.leader.x_r);
    os << ',';
    put(os, r.leader.y_r);
    os << ',';
    put(os, r.leader.theta_r);
    os << ',';
    put(os, r.leader.v_r);
    os << ',';
    put(os, r.leader.omega_r);
    os << ",,,,,,,,,,,,,,\n";
    for (std::size_t i = 0; i < r.robots.size(); ++i) {
      const RobotTick& rt = r.robots[i];
      put(os, r.t);
      os << ',' << (i + 1);
      for (double v : {rt.truth.x, rt.truth.y, rt.truth.theta, rt.truth.v, rt.truth.omega, rt.v_meas, rt.omega_meas,
                       rt.v_filt, rt.omega_filt, rt.command.v_c, rt.command.omega_c, rt.torque.tau_left,
                       rt.torque.tau_right, rt.error.e_x, rt.error.e_y, rt.error.e_theta, rt.error.x_hat,
                       rt.error.y_hat, rt.error.theta_hat}) {
        os << ',';
        put(os, v);
      }
      os << '\n';
    }
  }
}

inline json to_json(const MetricsReport& m) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json robots = json::array();
  for (std::size_t i = 0; i < m.robots.size(); ++i) {
    const RobotMetrics& r = m.robots[i];
    robots.push_back({{"robot_id", i + 1},
                      {"rmse_v", r.rmse_v},
                      {"rmse_omega", r.rmse_omega},
                      {"rmse_v_window", r.rmse_v_window},
                      {"rmse_omega_window", r.rmse_omega_window},
                      {"max_abs_v_cmd", r.max_abs_v_cmd},
                      {"tv_tau_l", r.tv_tau_left},
                      {"tv_tau_r", r.tv_tau_right},
                      {"settling_time", {{"x", opt(r.settling_x)}, {"y", opt(r.settling_y)}, {"theta", opt(r.settling_theta)}}}});
  }
  return {{"robots", robots},
          {"rmse_window", json::array({m.window_start, m.window_end})},
          {"lambda_min_k", m.lambda_min_k},
          {"estimator_decay_rate", opt(m.estimator_decay_rate)},
          {"controllers", {{"kinematic", m.kinematic}, {"dynamic", m.dynamic}, {"filter", m.filter}}},
          {"non_paper_baseline", m.non_paper_baseline}};
}

}  // namespace formation
