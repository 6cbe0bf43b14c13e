#ifndef GSEC_TOOLS_COMMANDS_HPP
#define GSEC_TOOLS_COMMANDS_HPP

#include <string>
#include <vector>

namespace gsec::cli {

// Process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,  // domain/shape errors and anything unexpected
    kExitConfig = 2,   // bad flags, config file, or missing inputs
    kExitFormat = 3,   // unreadable or corrupt files
    kExitClient = 4,   // MLLM / encoder endpoint failures
    kExitNumerical = 5,
};

// Parses `args` (args[0] is the program name), runs one subcommand and maps
// errors to exit codes. Messages go to stderr.
int run(const std::vector<std::string>& args);

}  // namespace gsec::cli

#endif  // GSEC_TOOLS_COMMANDS_HPP
