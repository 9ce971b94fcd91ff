#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace levelperc {

enum ExitCode : int { exit_ok = 0, exit_validation = 1, exit_verification = 2, exit_runtime = 3 };

/// Entire command-line front end; `args` excludes the program name.
/// Environment variable LEVELPERC_OUT sets the default output directory.
int run_cli(std::vector<std::string> const& args, std::ostream& out, std::ostream& err);

} // namespace levelperc
