#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace touchroller {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,    // bad flags or configuration
  kExitInput = 3,     // missing or unreadable inputs
  kExitPipeline = 4,  // a processing stage failed
};

/// Runs one subcommand (simulate, calibrate, localize, stitch, evaluate).
/// `args` excludes the program name. Diagnostics go to `err`, a one-line
/// summary to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace touchroller
