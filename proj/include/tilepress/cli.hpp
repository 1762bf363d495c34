#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tilepress/common.hpp"

namespace tp {

// Settings shared by every subcommand.
struct RunConfig {
    std::string rule;  // file path or builtin name
    std::vector<std::string> potentials;
    Caps caps;
    double tol = 1e-13;
    std::string out;     // empty: standard output
    std::string format;  // empty: the subcommand's default
    std::uint64_t seed = 1;

    // Throws Error("bad_param") unless caps are positive and tol lies in (0, 1).
    void check() const;
};

// Runs one invocation. Results go to `out` (or files under --out), error JSON to `err`.
// Returns 0 on success, 1 on a failed run, 2 on a usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tp
