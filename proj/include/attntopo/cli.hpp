#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace attntopo {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

/// Entry point of the `attntopo` tool. Results go to `out`, progress, the
/// run log, and errors go to `err`. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace attntopo
