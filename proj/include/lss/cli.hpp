#pragma once

#include <ostream>

namespace lss {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitFail = 2,
  kExitRefused = 3,
};

/// Entry point of the `lss` command; file paths go to out, diagnostics to err.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lss
