#pragma once

namespace hmc::tools {

/// Exit codes, one per error family.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,      // anything not classified below
  kParseExit = 2,    // malformed taxonomy/dataset/checkpoint content
  kConfigExit = 3,   // invalid configuration values
  kDomainExit = 4,   // out-of-range arguments, shape mismatches
  kIoExit = 5,       // unreadable/unwritable files
  kCompatExit = 6,   // taxonomy-hash or checkpoint incompatibilities
  kUsageExit = 64,   // bad command line
};

/// Full command-line entry point: parses argv, dispatches the subcommand,
/// maps exceptions to exit codes. In-process callable for tests.
int run_cli(int argc, const char* const* argv);

}  // namespace hmc::tools
