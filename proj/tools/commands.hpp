#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dgd::cli {

/// Runs one `dgd` invocation (args[0] is the program name). Errors print a
/// single "dgd-error: <Code>: message" line to `err` and return nonzero.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dgd::cli
