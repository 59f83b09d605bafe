#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace agmlab {

// Runs the agmlab command line. args excludes the program name. Returns the
// process exit code: 0 success, 2 configuration error, 3 cap exceeded.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace agmlab
