#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace idt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `idt` invocation. `args` excludes the program name. Standard
/// output and error are routed to `out` and `err` unless a file flag says
/// otherwise.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace idt::cli
