#pragma once

#include <iosfwd>

namespace fraccap {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitModel = 3;

/// Entry point of the fraccap command-line tool. Subcommands: synthesize,
/// cycle, fit, ingest, report, montecarlo.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fraccap
