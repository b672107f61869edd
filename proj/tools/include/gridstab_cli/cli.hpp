#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gridstab::cli {

/// Process exit codes.
enum ExitCode : int {
    kOk = 0,
    kFailure = 1,         // unexpected error
    kUsage = 2,           // bad command line or config file
    kConfig = 3,          // invalid parameter values
    kSchema = 4,          // malformed input files
    kGridInvalid = 5,     // disconnected or unbalanced grid
    kIo = 6,              // unreadable or unwritable paths
    kNoSync = 7,          // no stable operating point
    kTraining = 8,        // training diverged
    kPartial = 9,         // some grids failed, the rest succeeded
    kExists = 10,         // outputs exist and --force was not given
};

/// Runs the command line `args` (without the program name). Progress goes
/// to `err`, help and version text to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gridstab::cli
