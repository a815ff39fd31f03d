#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mplx::cli {

// Runs the command line; returns the process exit code
// (0 success, 1 input or validation error, 2 internal error).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mplx::cli
