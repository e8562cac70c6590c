#pragma once

#include <ostream>

namespace mpbin::cli {

/// Runs one subcommand. Returns 0 on success, 1 for data or domain errors
/// (diagnostic on err), 2 for usage errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mpbin::cli
