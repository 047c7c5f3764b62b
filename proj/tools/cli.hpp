#pragma once

#include <iosfwd>

namespace llf::cli {

// Parses argv and runs the requested command. Returns the process exit
// status: 0 on success, 1 on a runtime failure, 2 on a usage error. Errors
// are reported on `err` as a single-line JSON record.
int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace llf::cli
