#pragma once

// The repsim command line, callable in-process.
//
// Exit codes: 0 ok, 2 parse or I/O error, 3 dimension mismatch,
// 4 degenerate input, 5 numerical failure or non-PSD input,
// 6 verification failure.

#include <iosfwd>
#include <string>
#include <vector>

namespace repsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitDimension = 3;
inline constexpr int kExitDegenerate = 4;
inline constexpr int kExitNumerical = 5;
inline constexpr int kExitVerification = 6;

// `args` excludes the program name. Reports go to `out` unless --out names
// a file; diagnostics and summaries go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace repsim::cli
