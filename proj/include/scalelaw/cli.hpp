#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace scalelaw {

// Runs one command line (args excludes the program name). Exit code 0 on
// success, 1 on usage or validation errors, 2 on numerical failures.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_command(int argc, const char* const* argv);

}  // namespace scalelaw
