#pragma once

#include <iosfwd>

namespace netdeconf::cli {

/// Process exit codes; stable across releases.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kBadInput = 2,  // bad config, usage error, malformed or missing input file
  kIoFailure = 3,
  kDegenerateSplit = 4,
  kNonFiniteLoss = 5,
  kCheckpointMismatch = 6,
  kGradcheckFailed = 7,
};

/// Runs one command line. Tables go to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace netdeconf::cli
