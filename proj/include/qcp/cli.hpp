#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qcp::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kNumericalError = 3,
  kCertificationFailed = 4,
};

/// Runs the command line (args excludes the program name). Results go to `out`
/// unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qcp::cli
