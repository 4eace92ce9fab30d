#pragma once

#include <ostream>

namespace gazenet::cli {

// Entry point shared by the executable and the tests. Returns the process
// exit code: 0 success, 1 pipeline failure, 2 usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gazenet::cli
