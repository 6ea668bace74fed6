#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dynbound::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,        // bad flags, unreadable or malformed system file
  kExitIntegration = 2,  // blow-up, step underflow, missing section return
  kExitBoundFailure = 3,
};

/// Runs one `dynbound <command> ...` invocation. `args` excludes the program
/// name. Machine output goes to `out` only with --stdout, everything else to
/// files under --out; human-readable messages go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "1,2.5,-3" -> {1, 2.5, -3}; throws std::invalid_argument on junk.
std::vector<double> parse_vector(std::string_view text);

}  // namespace dynbound::cli
