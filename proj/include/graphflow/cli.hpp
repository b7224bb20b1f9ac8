#pragma once

#include <string>
#include <vector>

namespace graphflow {
namespace cli {

// Exit codes: 0 success, 1 check failure, 2 config rejection, 3 guard trip,
// 4 I/O error.
constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfigRejected = 2;
constexpr int kExitGuardTrip = 3;
constexpr int kExitIo = 4;

// Run the flow described by a config file; writes series.csv and summary.json
// into the configured output directory.
int cmd_run(const std::string& config_path);

// Oracle cross-checks on the initial state only: Hodge-star Jacobians vs the
// closed forms, graphical-velocity consistency, and the curvature-identity
// refinement pair. Prints one table row per check.
int cmd_check(const std::string& config_path);

// Convergence sweep over grid resolution, time step, or perturbation
// amplitude; prints an observed-order table.
int cmd_sweep(const std::string& config_path, const std::string& axis,
              const std::vector<double>& values);

}  // namespace cli
}  // namespace graphflow
