#include <CLI11.hpp>

#include "formation/cli.hpp"

int main(int argc, char** argv) {
  using namespace formation::cli;
  CLI::App app{"Leader-follower formation control simulator"};
  app.require_subcommand(1);

  ScenarioSource source;
  std::string config, out = "out", axis, suite;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "scenario JSON (built-in default scenario when omitted)");
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--seed", seed, "noise seed");
    cmd->add_option("--set", source.overrides, "override as dotted.path=value")->take_all()->allow_extra_args(false);
  };

  auto* run_cmd = app.add_subcommand("run", "run one scenario");
  add_common(run_cmd);
  auto* cmp_cmd = app.add_subcommand("compare", "run each variant along one axis");
  add_common(cmp_cmd);
  cmp_cmd->add_option("--axis", axis, "kinematic|dynamic|filter")->required();
  auto* rep_cmd = app.add_subcommand("replicate", "canned replication suite");
  rep_cmd->add_option("--suite", suite, "fig3|fig4|fig5|fig6|table1|table2")->required();
  rep_cmd->add_option("--out", out, "output directory");
  rep_cmd->add_option("--seed", seed, "noise seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (!config.empty()) source.config = config;
  const bool seeded = (run_cmd->parsed() && run_cmd->count("--seed")) || (cmp_cmd->parsed() && cmp_cmd->count("--seed")) ||
                      (rep_cmd->parsed() && rep_cmd->count("--seed"));
  if (seeded) source.seed = seed;

  try {
    if (run_cmd->parsed()) return cmd_run(source, out);
    if (cmp_cmd->parsed()) return cmd_compare(source, axis, out);
    return cmd_replicate(suite, out, source.seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
