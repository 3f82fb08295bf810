#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace shortpanel {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitValidation = 2,
    kExitNumerical = 3,
    kExitUnreliable = 4,
};

/// Runs `shortpanel <estimate|simulate|inspect> ...`. `args` excludes the
/// program name. Reports go to files or `out`; errors are one line on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace shortpanel
