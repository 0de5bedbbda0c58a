#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace augtriever::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs one subcommand (args exclude the program name). Reports and data go to
/// `out` when no output path is given; diagnostics go to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Flat "key = value" lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path);

}  // namespace augtriever::cli
