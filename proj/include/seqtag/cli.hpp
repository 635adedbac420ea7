#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace seqtag::cli {

enum ExitCode : int {
  kOk = 0,
  kIoError = 2,
  kDataError = 3,
  kConfigError = 4,
};

/// Runs `seqtag <subcommand> ...`; args exclude the program name.
/// Regular output goes to `out`, logs and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace seqtag::cli
