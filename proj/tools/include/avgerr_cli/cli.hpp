#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace avgerr::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitInvalidInput = 2,
  kExitNumericalFailure = 3,
};

/// Runs the command line `args` (without the program name). Command output goes to
/// `out`, diagnostics to `err`; the return value is the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace avgerr::cli
