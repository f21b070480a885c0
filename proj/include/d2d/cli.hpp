#pragma once

#include <string>
#include <vector>

namespace d2d::cli {

inline constexpr const char* kToolName = "d2dcache";
inline constexpr const char* kToolVersion = "0.1.0";

// Runs the command-line tool. Exit codes: 0 success, 1 usage errors,
// 2 configuration validation failure, 3 infeasible exact enumeration.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace d2d::cli
