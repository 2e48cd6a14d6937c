#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace urban3d::cli {

/// Runs one command line (args[0] is the program name). Returns the process
/// exit code: 0 success, 2 input or configuration error, 3 I/O error,
/// 4 model failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace urban3d::cli
