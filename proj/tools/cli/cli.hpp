#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace asap::cli {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

// `args` excludes the program name. Diagnostics go to `err`, usage and help
// text to `out`.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

int run(int argc, char** argv);

}  // namespace asap::cli
