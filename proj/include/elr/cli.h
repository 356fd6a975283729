#ifndef ELR_CLI_H_
#define ELR_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace elr {

enum ExitCode { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2 };

// Runs one `elr` subcommand. args excludes the program name.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

// Applies ELR_LOG (trace, debug, info, warn, error, off) to the logger.
void configure_logging();

}  // namespace elr

#endif  // ELR_CLI_H_
