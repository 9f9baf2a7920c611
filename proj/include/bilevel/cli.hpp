#pragma once

// Command-line driver: toy gradient runs and sweeps, gradient checks, and
// segmentation training/inference.  Configuration is resolved as defaults,
// overlaid by an optional flat "key = value" file (--config), overlaid by
// flags; every run writes a manifest echoing the resolved configuration and
// CSV outputs stamped with its hash.

#include <string>
#include <vector>

namespace bilevel::cli {

// Exit status: 0 success, 1 usage error (bad flags, malformed config or
// files), 2 numerical failure (divergence, non-converged solves, failed
// gradient checks).  The BILEVEL_THREADS environment variable caps sweep
// workers (unset or 0: serial).
int cli_main(int argc, const char* const* argv);

// Convenience overload for in-process use; `args` excludes the program name.
int cli_main(const std::vector<std::string>& args);

}  // namespace bilevel::cli
