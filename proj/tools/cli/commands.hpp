#pragma once

#include <iosfwd>
#include <string>
#include <vector>

// The `rehearsal` command line: validate, run, report, simulate-cohort,
// analyze and serve. Exit codes are shared by every command.

namespace rehearsal::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;  // validation, trace, log or statistics failure
inline constexpr int kExitUsage = 2;   // bad arguments or I/O failure

/// Parses `args` (without the program name) and runs the command, writing
/// results to `out` and diagnostics to `err`. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rehearsal::cli
