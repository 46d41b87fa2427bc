#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace delaysynth::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kInternal = 3 };

/// Runs the command line `args` (args[0] is the program name). A one-line
/// JSON summary goes to `out`; failures print one JSON object
/// {"error": <category>, "message": ...} to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace delaysynth::cli
