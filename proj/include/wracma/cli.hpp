#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace wracma {

/// Subcommands: list, solve, run, verify. Returns 0 on completion, 2 on a
/// usage or configuration error and 1 on an internal error.
int cli_main(int argc, char** argv);

/// Same, with argv[0] omitted and explicit output streams.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wracma
