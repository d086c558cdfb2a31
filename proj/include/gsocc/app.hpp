#pragma once

#include <iosfwd>

namespace gsocc {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitInput = 3,
  kExitInternal = 4,
};

/// Command-line entry point. Subcommands: gen-scene, gen-trajectory,
/// render-cues, run-embodied, run-local, ablate-fusion, eval, print-config.
int run_app(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gsocc
