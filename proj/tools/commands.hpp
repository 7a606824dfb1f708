#pragma once

#include "config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>

namespace nhocp::cli {

enum ExitCode : int {
  kSuccess = 0,
  kRuntimeFailure = 1,
  kNonConvergence = 2,
  kInvariantFailure = 3,
  kConfigFailure = 4,
  kChartExit = 5,
};

struct CommandOptions {
  std::filesystem::path out = "nhocp_out";
  int jobs = 1;
  bool planted = false;
  std::optional<double> tol;
};

/// Each command writes its files under options.out and returns an exit code.
int cmd_simulate(const RunConfig& cfg, const CommandOptions& options, std::ostream& log);
int cmd_optimize(const RunConfig& cfg, const CommandOptions& options, std::ostream& log);
int cmd_sweep(const RunConfig& cfg, const CommandOptions& options, std::ostream& log);
int cmd_check(const RunConfig& cfg, const CommandOptions& options, std::ostream& log);

}  // namespace nhocp::cli
