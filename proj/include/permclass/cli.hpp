#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace permclass {

// Command line entry point, separated from main() so tests can drive it.
// Returns the process exit code: 0 success, 1 domain failure, 2 usage.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace permclass
