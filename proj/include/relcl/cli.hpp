#pragma once

#include <iosfwd>

namespace relcl {

// Entry point of the relcl tool. Returns 0 on success, 1 on validation or
// configuration errors (including bad flags), 2 on runtime failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace relcl
