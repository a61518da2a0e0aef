#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hgformer {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumeric = 3,
};

/// Entry point of the `hgformer` tool. Subcommands: train, cv, sweep,
/// verify-equivalence, laplacian, synth, ingest-check.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Parses "0,0.1,0.2" and the progression shorthand "0,0.1,...,1.0".
std::vector<double> parse_value_list(const std::string& text);

}  // namespace hgformer
