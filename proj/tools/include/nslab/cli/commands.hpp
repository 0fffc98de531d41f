#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nslab::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 1,
    kExitRuntime = 2,
    kExitFlagged = 3,
};

/// Runs one CLI invocation. `args` excludes the program name. Reports go to
/// `out` (or to the output file), diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nslab::cli
