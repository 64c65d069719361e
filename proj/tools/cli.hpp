#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace refind::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // runtime failure
inline constexpr int kExitUsage = 2;    // bad command, flags or input paths

// Entry point for the `refind` tool. `args[0]` is the program name.
// Subcommands: index, retrieve, detect, detect-diff, eval, sweep, normalize.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace refind::cli
