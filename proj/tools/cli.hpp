#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gcog::cli {

// Exit codes: 0 success, 1 verification or data failure, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDataFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gcog::cli
