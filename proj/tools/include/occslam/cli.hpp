#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace occslam {

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "OCCSLAM_OUT_DIR";

/// Runs one subcommand. `args` excludes the program name. Exit codes: 0 on
/// success, 1 when the run fails, 2 on a usage error.
int CliMain(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int CliMain(int argc, const char* const* argv);

}  // namespace occslam
