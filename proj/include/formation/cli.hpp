#pragma once

// Command implementations behind the formation_sim tool. Each returns a process
// exit code: 0 success, 2 configuration error, 3 numerical abort.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "formation/scenario.hpp"
#include "formation/sim_engine.hpp"

#ifndef FORMATION_VERSION
#define FORMATION_VERSION "0.0.0"
#endif

namespace formation::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct RunManifest {
  std::string scenario;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
  std::string version = FORMATION_VERSION;

  json to_json() const {
    return {{"scenario", scenario},
            {"config_hash", config_hash},
            {"seed", seed},
            {"outputs", outputs},
            {"versions", {{"formation", version}}}};
  }
};

/// Where a scenario comes from: a file, or the built-in default.
struct ScenarioSource {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;

  ScenarioConfig load() const {
    ScenarioConfig cfg = config ? load_scenario(config->string(), overrides) : apply_overrides(default_scenario(), overrides);
    if (seed) cfg.seed = *seed;
    validate(cfg);
    return cfg;
  }
};

namespace detail {

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

inline void write_run_csv(const fs::path& path, const RunResult& r) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_csv(os, r.records);
}

inline RunManifest manifest_for(const ScenarioConfig& cfg) {
  RunManifest m;
  m.scenario = cfg.name;
  m.config_hash = hex(config_hash(cfg));
  m.seed = cfg.seed;
  return m;
}

/// Maps the library's exception types onto exit codes.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical abort: " << e.what() << '\n';
    return kExitNumerical;
  }
}

inline std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

/// Single run: run.csv, metrics.json, manifest.json in out_dir.
inline int cmd_run(const ScenarioSource& source, const fs::path& out_dir, std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    const ScenarioConfig cfg = source.load();
    const RunResult r = run(cfg);
    fs::create_directories(out_dir);
    RunManifest m = detail::manifest_for(cfg);
    detail::write_run_csv(out_dir / "run.csv", r);
    detail::write_text(out_dir / "metrics.json", to_json(r.metrics).dump(2) + "\n");
    m.outputs = {(out_dir / "run.csv").string(), (out_dir / "metrics.json").string(),
                 (out_dir / "manifest.json").string()};
    detail::write_text(out_dir / "manifest.json", m.to_json().dump(2) + "\n");
    return kExitOk;
  });
}

enum class CompareAxis { kinematic, dynamic, filter };

inline CompareAxis axis_from_string(const std::string& s) {
  if (s == "kinematic") return CompareAxis::kinematic;
  if (s == "dynamic") return CompareAxis::dynamic;
  if (s == "filter") return CompareAxis::filter;
  throw ConfigError("axis", "unknown comparison axis '" + s + "' (kinematic|dynamic|filter)");
}

struct Variant {
  std::string name;
  ScenarioConfig config;
};

inline std::vector<Variant> variants(const ScenarioConfig& base, CompareAxis axis) {
  std::vector<Variant> out;
  auto add = [&](auto value, auto setter) {
    ScenarioConfig c = base;
    setter(c, value);
    out.push_back({to_string(value), c});
  };
  switch (axis) {
    case CompareAxis::kinematic:
      for (auto k : {KinematicControl::conventional, KinematicControl::bioinspired})
        add(k, [](ScenarioConfig& c, KinematicControl v) { c.kinematic = v; });
      break;
    case CompareAxis::dynamic:
      for (auto d : {DynamicControl::conventional_smc, DynamicControl::super_twisting, DynamicControl::bioinspired_smc})
        add(d, [](ScenarioConfig& c, DynamicControl v) { c.dynamic = v; });
      break;
    case CompareAxis::filter:
      for (auto f : {FilterKind::kf, FilterKind::sif, FilterKind::asif})
        add(f, [](ScenarioConfig& c, FilterKind v) { c.filter = v; });
      break;
  }
  return out;
}

struct VariantResult {
  std::string name;
  RunResult result;
};

inline json comparison_json(CompareAxis axis, const std::vector<VariantResult>& results) {
  json vs = json::array();
  for (const auto& v : results) {
    json robots = json::array();
    for (std::size_t i = 0; i < v.result.metrics.robots.size(); ++i) {
      const RobotMetrics& m = v.result.metrics.robots[i];
      robots.push_back({{"robot_id", i + 1},
                        {"max_abs_v_cmd", m.max_abs_v_cmd},
                        {"tv_tau_l", m.tv_tau_left},
                        {"tv_tau_r", m.tv_tau_right},
                        {"rmse_v", m.rmse_v_window},
                        {"rmse_omega", m.rmse_omega_window}});
    }
    vs.push_back({{"variant", v.name}, {"non_paper_baseline", v.result.metrics.non_paper_baseline}, {"robots", robots}});
  }
  static const char* names[] = {"kinematic", "dynamic", "filter"};
  return {{"axis", names[static_cast<int>(axis)]}, {"variants", vs}};
}

/// RMSE table for a filter comparison, one row per follower, columns for the
/// named variants (linear and angular each).
inline std::string rmse_table(const std::string& title, const std::vector<VariantResult>& results,
                              const std::vector<std::string>& columns) {
  std::string s = title + "\n";
  s += "follower";
  for (const auto& c : columns) s += "  " + c + "_v    " + c + "_omega";
  s += "\n";
  const std::size_t n = results.front().result.metrics.robots.size();
  for (std::size_t i = 0; i < n; ++i) {
    s += "   " + std::to_string(i + 1) + "    ";
    for (const auto& c : columns)
      for (const auto& v : results)
        if (v.name == c) {
          const RobotMetrics& m = v.result.metrics.robots[i];
          s += "  " + detail::fixed(m.rmse_v_window) + "  " + detail::fixed(m.rmse_omega_window) + "   ";
        }
    s += "\n";
  }
  return s;
}

inline std::vector<VariantResult> run_variants(const std::vector<Variant>& vs) {
  std::vector<VariantResult> out;
  for (const auto& v : vs) out.push_back({v.name, run(v.config)});
  return out;
}

inline void write_variants(const fs::path& out_dir, CompareAxis axis, const std::vector<VariantResult>& results) {
  fs::create_directories(out_dir);
  for (const auto& v : results) detail::write_run_csv(out_dir / (v.name + ".csv"), v.result);
  detail::write_text(out_dir / "comparison.json", comparison_json(axis, results).dump(2) + "\n");
}

/// One run per variant on the axis, same seed; per-variant CSVs plus comparison.json.
inline int cmd_compare(const ScenarioSource& source, const std::string& axis_name, const fs::path& out_dir,
                       std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    const CompareAxis axis = axis_from_string(axis_name);
    const ScenarioConfig cfg = source.load();
    const auto results = run_variants(variants(cfg, axis));
    write_variants(out_dir, axis, results);
    if (axis == CompareAxis::filter)
      detail::write_text(out_dir / "rmse_table.txt",
                         rmse_table(cfg.fault.enabled ? "Velocity RMSE, faulty model" : "Velocity RMSE", results,
                                    {"kf", "asif"}));
    return kExitOk;
  });
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"fig3", "fig4", "fig5", "fig6", "table1", "table2"};
  return names;
}

/// Canned replication runs on the built-in scenario.
inline int cmd_replicate(const std::string& suite, const fs::path& out_dir, std::optional<std::uint64_t> seed = {},
                         std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    ScenarioConfig cfg = default_scenario();
    if (seed) cfg.seed = *seed;
    if (suite == "fig3" || suite == "fig4") {
      cfg.name = suite;
      const RunResult r = run(cfg);
      fs::create_directories(out_dir);
      detail::write_run_csv(out_dir / "run.csv", r);
      detail::write_text(out_dir / "metrics.json", to_json(r.metrics).dump(2) + "\n");
      return kExitOk;
    }
    if (suite == "fig5" || suite == "fig6") {
      const CompareAxis axis = suite == "fig5" ? CompareAxis::kinematic : CompareAxis::dynamic;
      write_variants(out_dir, axis, run_variants(variants(cfg, axis)));
      return kExitOk;
    }
    if (suite == "table1" || suite == "table2") {
      cfg.fault.enabled = suite == "table2";
      std::vector<Variant> vs;
      for (const auto& v : variants(cfg, CompareAxis::filter))
        if (v.name != "sif") vs.push_back(v);
      const auto results = run_variants(vs);
      write_variants(out_dir, CompareAxis::filter, results);
      const std::string table =
          rmse_table(suite == "table1" ? "Velocity RMSE, normal case" : "Velocity RMSE, faulty case (t >= t_fault)",
                     results, {"kf", "asif"});
      detail::write_text(out_dir / (suite + ".txt"), table);
      out << table;
      return kExitOk;
    }
    throw ConfigError("suite", "unknown suite '" + suite + "'");
  });
}

}  // namespace formation::cli
