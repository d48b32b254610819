#pragma once

// Command-line front end: synth, ingest, build, train, explain (predict),
// eval and report subcommands.

#include <iosfwd>
#include <string>
#include <vector>

namespace hilite::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// `args` excludes the program name. Diagnostics go to `err`, progress and
/// help to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace hilite::cli
