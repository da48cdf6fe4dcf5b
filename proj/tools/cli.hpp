#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gearsync::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (without the program name). Returns the process
/// exit code: 0 success, 1 runtime failure, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gearsync::cli
