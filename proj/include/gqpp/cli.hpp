#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gqpp {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumerical = 3 };

/// Runs the `gqpp` command line (arguments without the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args);

}  // namespace gqpp
