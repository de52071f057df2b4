// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace hot::cli {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // failure reason, empty on success
};

/// Fast invariant suite: Hadamard orthogonality and FWHT agreement, block
/// transform involution, quantizer unbiasedness, integer GEMM against a
/// float64 oracle, nibble and record round trips, exactness of the
/// unquantized full-rank backward, and policy round trips.
std::vector<CheckResult> run_selftests();

/// Prints one line per check and the `selftest: N passed, M failed` summary.
/// Returns the number of failures.
std::size_t report_selftests(const std::vector<CheckResult>& results, std::ostream& os);

}  // namespace hot::cli
