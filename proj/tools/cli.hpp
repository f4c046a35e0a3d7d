#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace emql::cli {

/// Entry point of the `emql` tool. `args[0]` is the program name. Returns the
/// process exit code; usage errors print help to `err` and return nonzero.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace emql::cli
