#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cpa {

/// Exit-code contract, stable across commands:
///   0 condition holds / no violation / generation succeeded
///   1 condition fails / violation found
///   2 usage, parse, or integrity error
///   3 inconclusive (search budget tripped, schedule exhausted, oracle bound)
inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInconclusive = 3;

/// Entry point behind main(): `args` excludes the program name. All normal
/// output goes to `out`, diagnostics to `err`; nothing is printed elsewhere,
/// so tests can capture both streams.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace cpa
