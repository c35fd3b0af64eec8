#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qpj::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kFormatError = 3,
  kFitFailed = 4,
  kFitWarned = 5,
};

// Entry point of the `qpjumps` tool. `args` excludes the program name. Normal
// output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qpj::cli
