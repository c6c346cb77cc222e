#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qualnet::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 2,
    kValidation = 3,
    kProvider = 4,
    kIo = 5,
};

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qualnet::cli
