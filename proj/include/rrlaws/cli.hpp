#pragma once

#include <string>
#include <vector>

namespace rrlaws::cli {

// Runs one CLI invocation. args excludes the program name.
// Exit codes: 0 success, 1 computation/validation error, 2 usage error.
int dispatch(std::vector<std::string> args);

}  // namespace rrlaws::cli
