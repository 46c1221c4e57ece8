#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rgbdt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

// Runs the command line `args` (args[0] is the program name). Never throws;
// errors are reported on `err` and mapped to an exit code.
// args[0] is the program name, as in argv.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace rgbdt::cli
