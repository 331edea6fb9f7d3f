#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sphconv::cli {

/// Environment variable that overrides the output directory.
inline constexpr const char* kOutDirEnv = "SPHCONV_OUT_DIR";

/// `<subcommand> [--field value ...] [--config file.json]`, without the
/// program name. Flags are applied over the subcommand defaults and the
/// config file over the flags. Outputs go to <out_dir>/<subcommand>/.
/// Returns 0 when every check passes, 1 when one fails or the run raises,
/// 2 on a usage or configuration error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace sphconv::cli
