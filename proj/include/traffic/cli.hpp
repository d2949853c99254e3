#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace traffic::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kDomain = 2, kVerificationFailed = 3 };

/// Parses argv (argv[0] is the program name), runs the subcommand and writes
/// CSV artifacts. Diagnostics go to `err`, summaries to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Expands "start:stop:step" or a comma-separated list into values.
std::vector<double> parse_grid(const std::string& text);

}  // namespace traffic::cli
