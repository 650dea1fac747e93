#ifndef WEFIX_TOOLS_CLI_H_
#define WEFIX_TOOLS_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace wefix {

enum ExitCode {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitPartial = 3,
};

// Runs the wefix command line with |args| (args[0] is the program name).
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace wefix

#endif  // WEFIX_TOOLS_CLI_H_
