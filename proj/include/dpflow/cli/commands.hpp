#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "dpflow/cli/config.hpp"

namespace dpflow::cli {

enum ExitCode : int { kPass = 0, kPropertyFailure = 1, kConfigError = 2, kNumericError = 3 };

std::vector<std::string> subcommands();

/// Runs a subcommand and writes its artifacts under cfg.out. Errors are
/// mapped to exit codes and reported on `log`.
int run(const std::string& subcommand, const RunConfig& cfg, std::ostream& log);

/// Human-readable summary of previously written JSON reports.
int report(const std::vector<std::string>& json_paths, std::ostream& os);

}  // namespace dpflow::cli
