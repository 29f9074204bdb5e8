#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace iqr::cli {

/// Exit codes.
enum Exit : int {
  kOk = 0,
  kFailure = 1,  // a contract check failed or an unexpected error
  kSpecError = 2,
  kIoError = 3,
  kInsufficientSamples = 4,
  kNullSpaceFailure = 5,
  kCapExceeded = 6,
  kFamilyFailed = 7,
};

/// Runs one command line (args excludes the program name). Data and paths
/// go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace iqr::cli
