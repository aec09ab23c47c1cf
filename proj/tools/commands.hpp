#pragma once

#include <string>
#include <vector>

namespace patchtrack::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kBadArguments = 2,
    kIoFailure = 3,
    kNumericFailure = 4,
};

/// Runs the command line `args` (args[0] is the program name) and returns the exit code.
int run(const std::vector<std::string>& args);

}  // namespace patchtrack::cli
