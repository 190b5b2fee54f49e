#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spt::cli {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kInvalid = 2,  // bad flags, config or input data
    kRefuted = 3,  // the synthetic trend restriction is rejected by the data
};

// args excludes the program name. JSON goes to out (or to --out), messages to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spt::cli
