#pragma once

// Scenario configuration: defaults, JSON (de)serialization with dotted-path
// error reporting, overrides, validation and a stable content hash.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "formation/control.hpp"
#include "formation/distributed_estimator.hpp"
#include "formation/leader_reference.hpp"
#include "formation/state_filter.hpp"
#include "formation/topology.hpp"
#include "formation/vehicle.hpp"

namespace formation {

using nlohmann::json;

enum class KinematicControl { conventional, bioinspired };
enum class DynamicControl { conventional_smc, super_twisting, bioinspired_smc };

struct FollowerConfig {
  FormationOffset offset;
  Eigen::Vector3d initial_error = Eigen::Vector3d::Zero();  // (x_hat, y_hat, theta_hat) at t = 0
  VehicleParams vehicle;
  // Initial estimate minus truth: posture (x, y, theta) then (v, omega).
  Eigen::Vector3d estimate_posture_error = Eigen::Vector3d::Zero();
  Eigen::Vector2d estimate_velocity_error = Eigen::Vector2d::Zero();
};

struct MetricsOptions {
  double threshold_xy = 0.05;     // m
  double threshold_theta = 0.05;  // rad
  double decay_fit_window = 5.0;  // s
};

struct ScenarioConfig {
  std::string name = "default";
  double dt = 0.01;
  double t_end = 30.0;
  std::uint64_t seed = 1;

  Topology topology;
  ReferencePath path;
  std::vector<FollowerConfig> followers;

  EstimatorGains estimator;
  EstimatorMode estimator_mode = EstimatorMode::delayed;
  double exchange_noise_sigma = 0.0;

  KinematicControl kinematic = KinematicControl::bioinspired;
  DynamicControl dynamic = DynamicControl::bioinspired_smc;
  bool filtered_feedback = true;
  KinematicGains kinematic_gains;
  ShuntingParams kinematic_shunting{4.0, 2.0, 2.0};
  DynamicGains dynamic_gains;
  SuperTwistingGains super_twisting;

  FilterKind filter = FilterKind::asif;
  Eigen::Vector2d q_diag{1e-4, 1e-4};
  Eigen::Vector2d r_diag{1e-4, 1e-4};
  Eigen::Vector2d rho_fixed{0.1, 0.1};
  bool asif_cap = true;
  Eigen::Vector2d measurement_sigma{0.01, 0.01};

  DisturbanceModel disturbance{0.5, 0.5, Waveform::sinusoid, 0.2, 0.5, 0.0};
  FaultSchedule fault;
  MetricsOptions metrics;

  std::size_t size() const { return followers.size(); }
};

/// Four followers on a 1-2-3-4 chain with follower 1 hearing the leader, sine
/// path with the 0.5 s speed ramp, and the default gains.
inline ScenarioConfig default_scenario() {
  ScenarioConfig c;
  c.topology.adjacency = {{0, 1, 0, 0}, {1, 0, 1, 0}, {0, 1, 0, 1}, {0, 0, 1, 0}};
  c.topology.leader_links = {1, 0, 0, 0};
  const double offsets[4][2] = {{4, -4}, {4, 4}, {7, -7}, {7, 7}};
  const double x_hat0[4] = {-1, 2, 2, 5};
  for (int i = 0; i < 4; ++i) {
    FollowerConfig f;
    f.offset = {offsets[i][0], offsets[i][1]};
    f.initial_error = {x_hat0[i], 0.0, 0.0};
    c.followers.push_back(f);
  }
  return c;
}

// ---------------------------------------------------------------------------
// enum <-> string

namespace detail {

template <class E>
struct EnumNames;

template <>
struct EnumNames<PathKind> {
  static constexpr std::pair<PathKind, const char*> table[] = {{PathKind::paper_sine, "paper_sine"},
                                                               {PathKind::circle, "circle"},
                                                               {PathKind::line, "line"},
                                                               {PathKind::waypoint_spline, "waypoint_spline"},
                                                               {PathKind::stationary, "stationary"}};
};
template <>
struct EnumNames<EstimatorMode> {
  static constexpr std::pair<EstimatorMode, const char*> table[] = {{EstimatorMode::delayed, "delayed"},
                                                                    {EstimatorMode::implicit, "implicit"}};
};
template <>
struct EnumNames<KinematicControl> {
  static constexpr std::pair<KinematicControl, const char*> table[] = {
      {KinematicControl::conventional, "conventional"}, {KinematicControl::bioinspired, "bioinspired"}};
};
template <>
struct EnumNames<DynamicControl> {
  static constexpr std::pair<DynamicControl, const char*> table[] = {
      {DynamicControl::conventional_smc, "conventional_smc"},
      {DynamicControl::super_twisting, "super_twisting"},
      {DynamicControl::bioinspired_smc, "bioinspired_smc"}};
};
template <>
struct EnumNames<FilterKind> {
  static constexpr std::pair<FilterKind, const char*> table[] = {
      {FilterKind::none, "none"}, {FilterKind::kf, "kf"}, {FilterKind::sif, "sif"}, {FilterKind::asif, "asif"}};
};
template <>
struct EnumNames<Waveform> {
  static constexpr std::pair<Waveform, const char*> table[] = {
      {Waveform::zero, "zero"}, {Waveform::constant, "constant"}, {Waveform::sinusoid, "sinusoid"}};
};

}  // namespace detail

template <class E>
std::string to_string(E e) {
  for (const auto& [v, name] : detail::EnumNames<E>::table)
    if (v == e) return name;
  return "?";
}

template <class E>
E enum_from_string(const std::string& s, const std::string& field) {
  std::string allowed;
  for (const auto& [v, name] : detail::EnumNames<E>::table) {
    if (s == name) return v;
    allowed += (allowed.empty() ? "" : ", ") + std::string(name);
  }
  throw ConfigError(field, "unknown value '" + s + "' (expected one of: " + allowed + ")");
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

/// Reads keys from one JSON object, tracks which were consumed, and reports
/// type errors with the full dotted path.
class Reader {
public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(at(key), "has the wrong type");
    }
  }

  void get_vec2(const std::string& key, Eigen::Vector2d& out) {
    std::vector<double> v;
    get(key, v);
    if (!j_.contains(key)) return;
    if (v.size() != 2) throw ConfigError(at(key), "expected 2 numbers");
    out = {v[0], v[1]};
  }

  void get_vec3(const std::string& key, Eigen::Vector3d& out) {
    std::vector<double> v;
    get(key, v);
    if (!j_.contains(key)) return;
    if (v.size() != 3) throw ConfigError(at(key), "expected 3 numbers");
    out = {v[0], v[1], v[2]};
  }

  template <class E>
  void get_enum(const std::string& key, E& out) {
    std::string s;
    get(key, s);
    if (j_.contains(key)) out = enum_from_string<E>(s, at(key));
  }

  Reader child(const std::string& key) {
    seen_.insert(key);
    return Reader(j_.at(key), at(key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  /// Unknown keys are errors so that typos in files or overrides surface.
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(at(k), "unknown key");
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline json vec(const Eigen::Vector2d& v) { return json::array({v(0), v(1)}); }
inline json vec(const Eigen::Vector3d& v) { return json::array({v(0), v(1), v(2)}); }

inline json shunting_json(const ShuntingParams& p) { return {{"A", p.decay}, {"B", p.upper}, {"D", p.lower}}; }

inline void read_shunting(Reader r, ShuntingParams& p) {
  r.get("A", p.decay);
  r.get("B", p.upper);
  r.get("D", p.lower);
  r.finish();
}

inline void read_vehicle(Reader r, VehicleParams& v) {
  r.get("mass", v.mass);
  r.get("inertia", v.inertia);
  r.get("wheel_radius", v.wheel_radius);
  r.get("half_axle", v.half_axle);
  r.finish();
}

inline json vehicle_json(const VehicleParams& v) {
  return {{"mass", v.mass}, {"inertia", v.inertia}, {"wheel_radius", v.wheel_radius}, {"half_axle", v.half_axle}};
}

}  // namespace detail

inline json to_json(const ScenarioConfig& c) {
  using detail::vec;
  json j;
  j["name"] = c.name;
  j["dt"] = c.dt;
  j["t_end"] = c.t_end;
  j["seed"] = c.seed;
  j["topology"] = {{"adjacency", c.topology.adjacency}, {"leader_links", c.topology.leader_links}};

  json path = {{"kind", to_string(c.path.kind)}, {"ramp_tau", c.path.ramp_tau},
               {"center", json::array({c.path.center_x, c.path.center_y})},
               {"radius", c.path.radius}, {"speed", c.path.speed},
               {"origin", json::array({c.path.origin_x, c.path.origin_y})}, {"heading", c.path.heading}};
  json wps = json::array();
  for (const auto& w : c.path.waypoints) wps.push_back(json::array({w.t, w.x, w.y}));
  path["waypoints"] = wps;
  j["path"] = path;

  json fs = json::array();
  for (const auto& f : c.followers) {
    fs.push_back({{"offset", json::array({f.offset.dx, f.offset.dy})},
                  {"initial_error", vec(f.initial_error)},
                  {"vehicle", detail::vehicle_json(f.vehicle)},
                  {"estimate_posture_error", vec(f.estimate_posture_error)},
                  {"estimate_velocity_error", vec(f.estimate_velocity_error)}});
  }
  j["followers"] = fs;

  json k = json::array();
  for (int r = 0; r < 3; ++r) k.push_back(json::array({c.estimator.k(r, 0), c.estimator.k(r, 1), c.estimator.k(r, 2)}));
  j["estimator"] = {{"mode", to_string(c.estimator_mode)}, {"k", k},
                    {"k_a1", c.estimator.k_a1}, {"k_b1", c.estimator.k_b1},
                    {"k_a2", c.estimator.k_a2}, {"k_b2", c.estimator.k_b2},
                    {"exchange_noise_sigma", c.exchange_noise_sigma}};

  j["controller"] = {{"kinematic", to_string(c.kinematic)}, {"dynamic", to_string(c.dynamic)},
                     {"filtered_feedback", c.filtered_feedback}};
  j["gains"] = {{"c1", c.kinematic_gains.c1}, {"c2", c.kinematic_gains.c2}, {"c3", c.kinematic_gains.c3},
                {"c_a", c.dynamic_gains.c_a}, {"c_b", c.dynamic_gains.c_b},
                {"st_k1", c.super_twisting.k1}, {"st_k2", c.super_twisting.k2}};
  j["shunting"] = {{"kinematic", detail::shunting_json(c.kinematic_shunting)},
                   {"linear", detail::shunting_json(c.dynamic_gains.linear)},
                   {"angular", detail::shunting_json(c.dynamic_gains.angular)}};
  j["filter"] = {{"kind", to_string(c.filter)}, {"q", vec(c.q_diag)}, {"r", vec(c.r_diag)},
                 {"rho_fixed", vec(c.rho_fixed)}, {"asif_cap", c.asif_cap}};
  j["noise"] = {{"measurement_sigma", vec(c.measurement_sigma)}};
  j["disturbance"] = {{"waveform", to_string(c.disturbance.waveform)},
                      {"bound_linear", c.disturbance.bound_linear},
                      {"bound_angular", c.disturbance.bound_angular},
                      {"amplitude", c.disturbance.amplitude},
                      {"frequency", c.disturbance.frequency},
                      {"phase", c.disturbance.phase}};
  j["fault"] = {{"enabled", c.fault.enabled}, {"t_fault", c.fault.t_fault},
                {"mass_scale", c.fault.mass_scale}, {"inertia_scale", c.fault.inertia_scale}};
  j["metrics"] = {{"threshold_xy", c.metrics.threshold_xy}, {"threshold_theta", c.metrics.threshold_theta},
                  {"decay_fit_window", c.metrics.decay_fit_window}};
  return j;
}

/// Starts from default_scenario() and overrides every key present. A document
/// that lists `followers` replaces the default follower set; a follower entry
/// without `vehicle` inherits the top-level `vehicle` block when given.
inline ScenarioConfig scenario_from_json(const json& j) {
  using detail::Reader;
  ScenarioConfig c = default_scenario();
  Reader root(j, "");
  root.get("name", c.name);
  root.get("dt", c.dt);
  root.get("t_end", c.t_end);
  root.get("seed", c.seed);

  if (root.has("topology")) {
    Reader t = root.child("topology");
    t.get("adjacency", c.topology.adjacency);
    t.get("leader_links", c.topology.leader_links);
    t.finish();
  }

  if (root.has("path")) {
    Reader p = root.child("path");
    p.get_enum("kind", c.path.kind);
    p.get("ramp_tau", c.path.ramp_tau);
    Eigen::Vector2d center(c.path.center_x, c.path.center_y), origin(c.path.origin_x, c.path.origin_y);
    p.get_vec2("center", center);
    p.get_vec2("origin", origin);
    c.path.center_x = center.x();
    c.path.center_y = center.y();
    c.path.origin_x = origin.x();
    c.path.origin_y = origin.y();
    p.get("radius", c.path.radius);
    p.get("speed", c.path.speed);
    p.get("heading", c.path.heading);
    if (p.has("waypoints")) {
      std::vector<std::vector<double>> w;
      p.get("waypoints", w);
      c.path.waypoints.clear();
      for (const auto& row : w) {
        if (row.size() != 3) throw ConfigError(p.at("waypoints"), "each waypoint is [t, x, y]");
        c.path.waypoints.push_back({row[0], row[1], row[2]});
      }
    }
    p.finish();
  }

  VehicleParams shared_vehicle;
  const bool has_shared_vehicle = root.has("vehicle");
  if (has_shared_vehicle) detail::read_vehicle(root.child("vehicle"), shared_vehicle);

  if (root.has("followers")) {
    const json& arr = root.raw("followers");
    if (!arr.is_array()) throw ConfigError("followers", "expected an array");
    c.followers.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Reader f(arr[i], "followers[" + std::to_string(i) + "]");
      FollowerConfig fc;
      fc.vehicle = shared_vehicle;
      Eigen::Vector2d off(0.0, 0.0);
      f.get_vec2("offset", off);
      fc.offset = {off.x(), off.y()};
      f.get_vec3("initial_error", fc.initial_error);
      if (f.has("vehicle")) detail::read_vehicle(f.child("vehicle"), fc.vehicle);
      f.get_vec3("estimate_posture_error", fc.estimate_posture_error);
      f.get_vec2("estimate_velocity_error", fc.estimate_velocity_error);
      f.finish();
      c.followers.push_back(fc);
    }
  } else if (has_shared_vehicle) {
    for (auto& f : c.followers) f.vehicle = shared_vehicle;
  }

  if (root.has("estimator")) {
    Reader e = root.child("estimator");
    e.get_enum("mode", c.estimator_mode);
    if (e.has("k")) {
      std::vector<std::vector<double>> k;
      e.get("k", k);
      if (k.size() != 3) throw ConfigError(e.at("k"), "expected a 3x3 matrix");
      for (int r = 0; r < 3; ++r) {
        if (k[r].size() != 3) throw ConfigError(e.at("k"), "expected a 3x3 matrix");
        for (int col = 0; col < 3; ++col) c.estimator.k(r, col) = k[r][col];
      }
    }
    e.get("k_a1", c.estimator.k_a1);
    e.get("k_b1", c.estimator.k_b1);
    e.get("k_a2", c.estimator.k_a2);
    e.get("k_b2", c.estimator.k_b2);
    e.get("exchange_noise_sigma", c.exchange_noise_sigma);
    e.finish();
  }

  if (root.has("controller")) {
    Reader r = root.child("controller");
    r.get_enum("kinematic", c.kinematic);
    r.get_enum("dynamic", c.dynamic);
    r.get("filtered_feedback", c.filtered_feedback);
    r.finish();
  }
  if (root.has("gains")) {
    Reader g = root.child("gains");
    g.get("c1", c.kinematic_gains.c1);
    g.get("c2", c.kinematic_gains.c2);
    g.get("c3", c.kinematic_gains.c3);
    g.get("c_a", c.dynamic_gains.c_a);
    g.get("c_b", c.dynamic_gains.c_b);
    g.get("st_k1", c.super_twisting.k1);
    g.get("st_k2", c.super_twisting.k2);
    g.finish();
  }
  if (root.has("shunting")) {
    Reader s = root.child("shunting");
    if (s.has("kinematic")) detail::read_shunting(s.child("kinematic"), c.kinematic_shunting);
    if (s.has("linear")) detail::read_shunting(s.child("linear"), c.dynamic_gains.linear);
    if (s.has("angular")) detail::read_shunting(s.child("angular"), c.dynamic_gains.angular);
    s.finish();
  }
  if (root.has("filter")) {
    Reader f = root.child("filter");
    f.get_enum("kind", c.filter);
    f.get_vec2("q", c.q_diag);
    f.get_vec2("r", c.r_diag);
    f.get_vec2("rho_fixed", c.rho_fixed);
    f.get("asif_cap", c.asif_cap);
    f.finish();
  }
  if (root.has("noise")) {
    Reader n = root.child("noise");
    n.get_vec2("measurement_sigma", c.measurement_sigma);
    n.finish();
  }
  if (root.has("disturbance")) {
    Reader d = root.child("disturbance");
    d.get_enum("waveform", c.disturbance.waveform);
    d.get("bound_linear", c.disturbance.bound_linear);
    d.get("bound_angular", c.disturbance.bound_angular);
    d.get("amplitude", c.disturbance.amplitude);
    d.get("frequency", c.disturbance.frequency);
    d.get("phase", c.disturbance.phase);
    d.finish();
  }
  if (root.has("fault")) {
    Reader f = root.child("fault");
    f.get("enabled", c.fault.enabled);
    f.get("t_fault", c.fault.t_fault);
    f.get("mass_scale", c.fault.mass_scale);
    f.get("inertia_scale", c.fault.inertia_scale);
    f.finish();
  }
  if (root.has("metrics")) {
    Reader m = root.child("metrics");
    m.get("threshold_xy", c.metrics.threshold_xy);
    m.get("threshold_theta", c.metrics.threshold_theta);
    m.get("decay_fit_window", c.metrics.decay_fit_window);
    m.finish();
  }
  root.finish();
  return c;
}

/// Applies `dotted.path=value` to a JSON document. The value is parsed as JSON
/// when possible and kept as a string otherwise. Array elements are addressed
/// by numeric segments, e.g. followers.3.initial_error.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must look like path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::stringstream ss(path);
  std::string seg;
  std::vector<std::string> segs;
  while (std::getline(ss, seg, '.')) segs.push_back(seg);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const bool last = i + 1 == segs.size();
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(segs[i]);
      } catch (const std::exception&) {
        throw ConfigError(path, "expected an array index at '" + segs[i] + "'");
      }
      if (idx >= node->size()) throw ConfigError(path, "index out of range");
      node = &(*node)[idx];
    } else {
      node = &(*node)[segs[i]];
    }
    if (last) *node = value;
  }
}

inline void validate(const ScenarioConfig& c) {
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw ConfigError("dt", "must be positive");
  if (!(c.t_end > c.dt)) throw ConfigError("t_end", "must exceed dt");
  c.topology.validate();
  if (const auto check = is_valid_for_estimation(c.topology); !check.valid)
    throw ConfigError("topology", check.diagnostic);
  if (c.followers.size() != c.topology.size())
    throw ConfigError("followers", "expected " + std::to_string(c.topology.size()) + " entries to match the topology");
  for (std::size_t i = 0; i < c.followers.size(); ++i)
    if (!c.followers[i].vehicle.valid())
      throw ConfigError("followers[" + std::to_string(i) + "].vehicle", "parameters must be strictly positive");

  validate_path(c.path);
  c.estimator.validate(leader_acceleration_bounds(c.path, c.t_end, c.dt));
  if (!(c.exchange_noise_sigma >= 0.0)) throw ConfigError("estimator.exchange_noise_sigma", "must be >= 0");

  if (!c.kinematic_gains.valid()) throw ConfigError("gains", "c1, c2, c3 must be positive");
  if (!c.kinematic_shunting.valid()) throw ConfigError("shunting.kinematic", "A, B, D must be positive");
  if (!c.dynamic_gains.valid()) throw ConfigError("gains", "c_a, c_b and dynamic shunting parameters must be positive");
  if (!c.super_twisting.valid()) throw ConfigError("gains", "st_k1, st_k2 must be positive");

  if (!(c.disturbance.bound_linear >= 0.0)) throw ConfigError("disturbance.bound_linear", "must be >= 0");
  if (!(c.disturbance.bound_angular >= 0.0)) throw ConfigError("disturbance.bound_angular", "must be >= 0");
  if (!c.dynamic_gains.covers(c.disturbance.bound_linear, c.disturbance.bound_angular))
    throw ConfigError("gains.c_a", "dynamic gains do not dominate the disturbance bounds (C B >= psi)");

  if (!(c.q_diag.minCoeff() > 0.0)) throw ConfigError("filter.q", "must be positive");
  if (!(c.r_diag.minCoeff() > 0.0)) throw ConfigError("filter.r", "must be positive");
  if (!(c.rho_fixed.minCoeff() > 0.0)) throw ConfigError("filter.rho_fixed", "must be positive");
  if (!(c.measurement_sigma.minCoeff() >= 0.0)) throw ConfigError("noise.measurement_sigma", "must be >= 0");
  if (!(c.fault.mass_scale > 0.0)) throw ConfigError("fault.mass_scale", "must be positive");
  if (!(c.fault.inertia_scale > 0.0)) throw ConfigError("fault.inertia_scale", "must be positive");
}

/// FNV-1a over the canonical (key-sorted) serialization.
inline std::uint64_t config_hash(const ScenarioConfig& c) {
  const std::string s = to_json(c).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config", path + " is not valid JSON");
  return j;
}

/// Overrides are applied to the canonical form of the parsed document, so every
/// key path exists. `vehicle.<field>=v` sets the field on every follower.
inline ScenarioConfig apply_overrides(const ScenarioConfig& base, const std::vector<std::string>& overrides) {
  if (overrides.empty()) return base;
  json j = to_json(base);
  for (const auto& o : overrides) {
    if (o.rfind("vehicle.", 0) == 0) {
      for (std::size_t i = 0; i < j["followers"].size(); ++i)
        apply_override(j, "followers." + std::to_string(i) + "." + o);
    } else {
      apply_override(j, o);
    }
  }
  return scenario_from_json(j);
}

inline ScenarioConfig load_scenario(const std::string& path, const std::vector<std::string>& overrides = {}) {
  return apply_overrides(scenario_from_json(read_json_file(path)), overrides);
}

}  // namespace formation
