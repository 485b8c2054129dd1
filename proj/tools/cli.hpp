#pragma once

namespace defhom::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kNumericalFailure = 3,
  kCapExceeded = 4,
};

/// Parses argv, runs one subcommand and maps library errors to exit codes
/// with a one-line diagnostic on stderr.
int run(int argc, char** argv);

}  // namespace defhom::cli
