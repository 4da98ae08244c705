#pragma once

#include <ostream>

namespace magic_markup {

/// Exit codes of the magic-markup executable.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  ///< unplaced annotations, invalid data, I/O or model errors
inline constexpr int kExitUsage = 2;    ///< bad flags or arguments

/// Runs the command line and returns the exit code. Never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace magic_markup
