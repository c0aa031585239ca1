#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fairreg::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kRuntimeError = 2,
};

/// Entry point shared by the executable, tests and the Python module.
/// args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace fairreg::cli
