#pragma once

// The fusionette command line: gen-synth, train, eval, ablate, validate-counts.
//
// Exit codes:
//   0  success
//   1  partial failure (ablate) or an unexpected internal error
//   2  usage error (bad flags or values)
//   3  unknown variant name
//   4  file format error (bad magic, version, truncation, checksum, payload)
//   5  dimension mismatch between model, spec and data
//   6  training precondition failed (empty split, label out of range)
//   7  I/O error (missing file or directory, unwritable path)

#include <iosfwd>
#include <string>
#include <vector>

namespace fusionette::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitUnknownVariant = 3;
inline constexpr int kExitFormat = 4;
inline constexpr int kExitDimension = 5;
inline constexpr int kExitTraining = 6;
inline constexpr int kExitIo = 7;

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

const char* version();

}  // namespace fusionette::cli
