#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sramsuc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // rejected, integrity error, ...
inline constexpr int kExitUsage = 2;

// Parses and runs one subcommand. Results go to `out`, diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace sramsuc::cli
