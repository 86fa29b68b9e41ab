#pragma once

#include <iosfwd>

namespace mad {

/// Exit codes: 0 success, 1 solver or verification failure, 2 usage or parse error.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

/// Entry point for the `mad` command-line tool; writes results to `out` and diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mad
