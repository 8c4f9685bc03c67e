#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fruitrack::app {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kDataError = 3,
  kRuntimeError = 4,
};

/// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fruitrack::app
