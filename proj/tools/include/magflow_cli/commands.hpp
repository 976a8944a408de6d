#pragma once

#include <string>
#include <vector>

namespace magflow::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitSuite = 4;

// Parses the command line and runs one subcommand.  Errors are reported as one
// JSON object on standard error; the return value is the process exit code.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace magflow::cli
