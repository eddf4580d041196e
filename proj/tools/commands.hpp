#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lagdyn::cli {

enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 2,
  kDataError = 3,
  kNumericalFailure = 4,
};

/// Parses argv, dispatches the subcommand and maps failures to exit codes.
/// Diagnostics go to `err`, reports to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lagdyn::cli
