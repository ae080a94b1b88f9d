#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mcne::cli {

/// Parses argv and runs the selected subcommand. Returns a process exit code;
/// diagnostics go to err, run summaries to out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mcne::cli
