#pragma once

#include <string>
#include <vector>

namespace sre::cli {

/// Runs one CLI invocation (args exclude the program name). Returns the
/// process exit code: 0 = all checks passed, 1 = a mathematical check
/// failed, 2 = input error. Never throws on user input.
int run(const std::vector<std::string>& args);

} // namespace sre::cli
