#pragma once

#include <ostream>

namespace refinekit::cli {

// Parses the command line and runs one subcommand. Exit codes: 0 when every
// artifact was written, 1 on a pipeline failure, 2 on a usage or
// configuration error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace refinekit::cli
