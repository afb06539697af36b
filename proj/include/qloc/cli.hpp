#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qloc::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kNumerical = 3,
  kInvariant = 4,
};

// args excludes the program name. Records go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qloc::cli
