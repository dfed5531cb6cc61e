#pragma once

#include <string>
#include <vector>

namespace ragcn::cli {

// Full command dispatch; returns the process exit code (0 success, 2 usage
// errors, 1 anything else). Arguments exclude the program name.
int run(const std::vector<std::string>& args);

}  // namespace ragcn::cli
