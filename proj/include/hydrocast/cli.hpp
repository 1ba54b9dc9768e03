#pragma once

#include <string>
#include <vector>

namespace hydrocast::cli {

// `hydrocast <subcommand> [flags]`. Returns 0 on success, 1 on usage errors
// and 2 on data or I/O errors.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);  // args exclude the program name

}  // namespace hydrocast::cli
