#pragma once

#include <string>
#include <vector>

namespace levydyn::cli {

// Exit status: 0 success, 1 runtime failure, 2 usage or configuration error.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace levydyn::cli
