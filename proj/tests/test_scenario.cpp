#include <gtest/gtest.h>

#include <filesystem>

#include "formation/scenario.hpp"

using namespace formation;

namespace {

std::string field_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

}  // namespace

TEST(Scenario, DefaultIsValid) { EXPECT_NO_THROW(validate(default_scenario())); }

TEST(Scenario, RoundTripIsHashEqualForShippedScenarios) {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(std::string(FORMATION_SOURCE_DIR) + "/scenarios")) {
    const ScenarioConfig c = load_scenario(entry.path().string());
    EXPECT_NO_THROW(validate(c)) << entry.path();
    const ScenarioConfig again = scenario_from_json(json::parse(to_json(c).dump()));
    EXPECT_EQ(config_hash(c), config_hash(again)) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 3);
}

TEST(Scenario, HashIgnoresKeyOrder) {
  const json a = json::parse(R"({"dt": 0.02, "t_end": 5.0, "seed": 9})");
  const json b = json::parse(R"({"seed": 9, "t_end": 5.0, "dt": 0.02})");
  EXPECT_EQ(config_hash(scenario_from_json(a)), config_hash(scenario_from_json(b)));
  EXPECT_NE(config_hash(scenario_from_json(a)), config_hash(default_scenario()));
}

TEST(Scenario, MissingKeysTakeDefaults) {
  const ScenarioConfig c = scenario_from_json(json::object());
  EXPECT_EQ(config_hash(c), config_hash(default_scenario()));
}

TEST(Scenario, UnknownKeyIsNamed) {
  EXPECT_EQ(field_of([] { scenario_from_json(json::parse(R"({"filter": {"kindd": "kf"}})")); }), "filter.kindd");
}

TEST(Scenario, WrongTypeAndBadEnumAreNamed) {
  EXPECT_EQ(field_of([] { scenario_from_json(json::parse(R"({"dt": "fast"})")); }), "dt");
  EXPECT_EQ(field_of([] { scenario_from_json(json::parse(R"({"controller": {"dynamic": "pid"}})")); }),
            "controller.dynamic");
}

TEST(Scenario, OverridesUseDottedPaths) {
  const ScenarioConfig c = apply_overrides(default_scenario(), {"gains.c1=5", "filter.kind=kf", "vehicle.mass=3",
                                                                "followers.2.offset.0=9", "fault.enabled=true"});
  EXPECT_DOUBLE_EQ(c.kinematic_gains.c1, 5.0);
  EXPECT_EQ(c.filter, FilterKind::kf);
  for (const auto& f : c.followers) EXPECT_DOUBLE_EQ(f.vehicle.mass, 3.0);
  EXPECT_DOUBLE_EQ(c.followers[2].offset.dx, 9.0);
  EXPECT_TRUE(c.fault.enabled);
  EXPECT_THROW(apply_overrides(default_scenario(), {"gains.c9=1"}), ConfigError);
  EXPECT_THROW(apply_overrides(default_scenario(), {"nonsense"}), ConfigError);
}

TEST(Scenario, ValidationNamesTheField) {
  auto with = [](std::function<void(ScenarioConfig&)> f) {
    ScenarioConfig c = default_scenario();
    f(c);
    return field_of([&] { validate(c); });
  };
  EXPECT_EQ(with([](ScenarioConfig& c) { c.dt = 0.0; }), "dt");
  EXPECT_EQ(with([](ScenarioConfig& c) { c.t_end = 0.001; }), "t_end");
  EXPECT_EQ(with([](ScenarioConfig& c) { c.topology.adjacency[0][1] = 0; }), "topology.adjacency");
  EXPECT_EQ(with([](ScenarioConfig& c) { c.topology.leader_links = {0, 0, 0, 0}; }), "topology");
  EXPECT_EQ(with([](ScenarioConfig& c) { c.followers.pop_back(); }), "followers");
  EXPECT_EQ(with([](ScenarioConfig& c) { c.estimator.k_b1 = 0.01; }), "estimator.k_b1");
  EXPECT_EQ(with([](ScenarioConfig& c) { c.r_diag.x() = -1.0; }), "filter.r");
  EXPECT_EQ(with([](ScenarioConfig& c) { c.kinematic_gains.c2 = 0.0; }), "gains");
}
