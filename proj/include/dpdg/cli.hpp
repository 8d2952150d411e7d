#pragma once

#include <iostream>

namespace dpdg {

/// Command-line front door.  Exit codes: 0 ok, 1 usage error, 2 numerical
/// failure (error name on err), 3 IO failure.
int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
            std::ostream& err = std::cerr);

}  // namespace dpdg
