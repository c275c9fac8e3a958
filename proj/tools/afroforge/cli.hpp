#pragma once

#include <string>
#include <vector>

namespace afro::cli {

// Exit codes: 0 ok, 1 a stage reported an error, 2 usage or config error.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);  // args[0] is the program name

}  // namespace afro::cli
