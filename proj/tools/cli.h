#ifndef SYNTHEHR_TOOLS_CLI_H_
#define SYNTHEHR_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace synthehr::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailed = 1;   // library error; message on err
inline constexpr int kUsage = 2;    // bad flags
inline constexpr int kPartial = 3;  // generate finished with failed triples

// Runs the command line. args excludes the program name.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace synthehr::cli

#endif  // SYNTHEHR_TOOLS_CLI_H_
