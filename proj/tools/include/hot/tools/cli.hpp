// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace hot::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,  // failed self-test or training error
  kUsage = 2,
  kConfig = 3,
  kData = 4,
};

/// Entry point of the `hot` tool. Subcommands: selftest, train, calibrate,
/// analyze, bench. Reports go to --out (or `out` when no path is given);
/// errors are reported on `err` as one `hot: <kind>: <reason>` line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hot::cli
