#pragma once

// Command-line front end: track, score, bench, regions, report.
//
// Exit codes: 0 success, 1 usage or validation error, 2 runtime failure; `track`
// propagates the child's exit code.

#include <iosfwd>
#include <string>
#include <vector>

namespace ecol2 {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Runs one invocation. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ecol2
