#pragma once

#include <string>
#include <vector>

namespace llost {

inline constexpr const char* kVersion = "0.1.0";

// Entry point behind main(); args excludes the program name. Returns the
// process exit code: 0 success, 2 usage or config error, 1 runtime failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace llost
