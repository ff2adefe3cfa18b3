#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace choquet::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int { kSuccess = 0, kInputError = 1, kInfeasible = 2, kNumerical = 3 };

/// Runs the tool on args (without the program name), writing the report to out or --out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

const char* tool_version();

}  // namespace choquet::cli
