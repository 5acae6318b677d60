#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace superpart::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitIo = 2,
  kExitConfig = 3,
  kExitInternal = 4,
};

// Entry point shared by the executable and the tests. `args` excludes the
// program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace superpart::cli
