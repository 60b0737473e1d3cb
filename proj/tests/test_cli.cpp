#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "formation/cli.hpp"

using namespace formation;
using namespace formation::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("formation_cli_" + name);
  fs::remove_all(p);
  return p;
}

ScenarioSource shipped(const std::string& name, std::vector<std::string> overrides = {}) {
  ScenarioSource s;
  s.config = fs::path(FORMATION_SOURCE_DIR) / "scenarios" / (name + ".json");
  s.overrides = std::move(overrides);
  return s;
}

}  // namespace

TEST(Cli, RunWritesThreeFiles) {
  const fs::path out = scratch("run");
  std::ostringstream err;
  ASSERT_EQ(cmd_run(shipped("default", {"t_end=2"}), out, err), kExitOk) << err.str();
  EXPECT_TRUE(fs::exists(out / "run.csv"));
  EXPECT_TRUE(fs::exists(out / "metrics.json"));
  std::ifstream in(out / "manifest.json");
  const json m = json::parse(in);
  EXPECT_EQ(m["scenario"], "default");
  EXPECT_EQ(m["seed"], 1);
  EXPECT_EQ(m["config_hash"].get<std::string>().size(), 16u);
  EXPECT_EQ(m["outputs"].size(), 3u);
}

TEST(Cli, ConfigErrorsExitTwoAndNameTheField) {
  std::ostringstream err;
  EXPECT_EQ(cmd_run(shipped("default", {"topology.adjacency.0.1=0"}), scratch("bad"), err), kExitConfig);
  EXPECT_NE(err.str().find("topology.adjacency"), std::string::npos);
  std::ostringstream err2;
  EXPECT_EQ(cmd_run(shipped("default", {"dt=0"}), scratch("bad"), err2), kExitConfig);
  EXPECT_NE(err2.str().find("dt"), std::string::npos);
  std::ostringstream err3;
  EXPECT_EQ(cmd_run(shipped("no_such_file"), scratch("bad"), err3), kExitConfig);
}

TEST(Cli, NumericalAbortExitsThree) {
  std::ostringstream err;
  EXPECT_EQ(cmd_run(shipped("default", {"t_end=1", "followers.0.initial_error.0=1e308", "gains.c1=1e308"}),
                    scratch("nan"), err),
            kExitNumerical)
      << err.str();
}

TEST(Cli, SeedFlagOverridesConfig) {
  ScenarioSource s = shipped("default", {"t_end=0.5"});
  s.seed = 42;
  const fs::path out = scratch("seed");
  ASSERT_EQ(cmd_run(s, out), kExitOk);
  std::ifstream in(out / "manifest.json");
  EXPECT_EQ(json::parse(in)["seed"], 42);
}

TEST(Cli, CompareKinematicWritesTwoVariants) {
  const fs::path out = scratch("cmp");
  ASSERT_EQ(cmd_compare(shipped("default", {"t_end=1"}), "kinematic", out), kExitOk);
  EXPECT_TRUE(fs::exists(out / "conventional.csv"));
  EXPECT_TRUE(fs::exists(out / "bioinspired.csv"));
  std::ifstream in(out / "comparison.json");
  const json j = json::parse(in);
  ASSERT_EQ(j["variants"].size(), 2u);
  EXPECT_GT(j["variants"][0]["robots"][3]["max_abs_v_cmd"].get<double>(),
            j["variants"][1]["robots"][3]["max_abs_v_cmd"].get<double>());
}

TEST(Cli, CompareDynamicFlagsBaseline) {
  const fs::path out = scratch("dyn");
  ASSERT_EQ(cmd_compare(shipped("default", {"t_end=1"}), "dynamic", out), kExitOk);
  std::ifstream in(out / "comparison.json");
  const json j = json::parse(in);
  ASSERT_EQ(j["variants"].size(), 3u);
  EXPECT_TRUE(j["variants"][1]["non_paper_baseline"].get<bool>());
  std::ostringstream err;
  EXPECT_EQ(cmd_compare(shipped("default"), "sideways", out, err), kExitConfig);
}

TEST(Cli, ReplicateTableHasKfAndAsifColumns) {
  const fs::path out = scratch("t2");
  std::ostringstream table, err;
  ASSERT_EQ(cmd_replicate("table2", out, std::nullopt, table, err), kExitOk) << err.str();
  const std::string t = table.str();
  EXPECT_NE(t.find("kf_v"), std::string::npos);
  EXPECT_NE(t.find("asif_v"), std::string::npos);
  std::istringstream lines(t);
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) rows += line.rfind("   ", 0) == 0;
  EXPECT_EQ(rows, 4);
  EXPECT_TRUE(fs::exists(out / "table2.txt"));
}

TEST(Cli, ReplicateFig3WritesTrajectories) {
  const fs::path out = scratch("fig3");
  ASSERT_EQ(cmd_replicate("fig3", out), kExitOk);
  std::ifstream in(out / "run.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, kCsvHeader);
}

TEST(Cli, UnknownSuiteExitsTwo) {
  std::ostringstream out, err;
  EXPECT_EQ(cmd_replicate("fig9", scratch("x"), std::nullopt, out, err), kExitConfig);
}
