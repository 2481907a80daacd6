#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pearlgan {

// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,     // unexpected internal error
  kExitConfig = 2,      // bad flag, unknown config key, invalid value
  kExitData = 3,        // missing/undecodable inputs, mismatched file sets
  kExitNonFinite = 4,   // a loss component became NaN/Inf during training
  kExitCheckpoint = 5,  // unreadable or incompatible checkpoint
};

// Entry point of the `pearlgan` tool. args[0] is the program name.
// Messages go to `out`, errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pearlgan
