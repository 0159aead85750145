#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace oilcast::cli {

// Exit codes of every subcommand.
inline constexpr int exit_success = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_data = 2;
inline constexpr int exit_numeric = 3;

// Runs one CLI invocation (args exclude the program name). Results and
// reports go to `out`, diagnostics to `diag`; every nonzero exit is
// accompanied by at least one diagnostic line.
int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
        std::ostream& diag = std::cerr);

} // namespace oilcast::cli
