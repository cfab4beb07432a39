#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace veridict {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// args excludes the program name. Errors are written to `err` as one JSON
// object {"error": kind, "message": text}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace veridict
