#pragma once

#include <iosfwd>

namespace dmca {

/// Exit codes: 0 success, 1 numeric or runtime failure, 2 usage or data error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs the `dmca` command line; reports go to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dmca
