#include "graphflow/cli.hpp"

#include <CLI11.hpp>

#include <string>
#include <vector>

int main(int argc, char** argv) {
  CLI::App app{"graphflow - graphical mean curvature flow between surfaces"};
  app.require_subcommand(1);

  std::string run_config, check_config, sweep_config, axis;
  std::vector<double> values;

  auto* run = app.add_subcommand("run", "advance a configured flow and write diagnostics");
  run->add_option("config", run_config, "JSON run configuration")->required();

  auto* check = app.add_subcommand("check", "oracle cross-checks on the initial state");
  check->add_option("config", check_config, "JSON run configuration")->required();

  auto* sweep = app.add_subcommand("sweep", "convergence-order sweep");
  sweep->add_option("config", sweep_config, "JSON run configuration")->required();
  sweep->add_option("--axis", axis, "grid | dt | amplitude")->required();
  sweep->add_option("--values", values, "sweep values")->required()->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return graphflow::cli::cmd_run(run_config);
  if (check->parsed()) return graphflow::cli::cmd_check(check_config);
  return graphflow::cli::cmd_sweep(sweep_config, axis, values);
}
