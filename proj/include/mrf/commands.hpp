#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "mrf/config.hpp"
#include "mrf/report.hpp"

namespace mrf {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitNonConvergence = 3,
};

struct CommandOptions {
  std::string out_dir = "out";
  unsigned threads = 1;
  std::optional<std::uint64_t> seed;  // overrides the config seed
  bool force = false;
};

struct CommandResult {
  int exit_code = kExitOk;
  ReportJson report;
};

/// Each command writes its files under options.out_dir and a one-line summary to `log`.
CommandResult cmd_verify(const RunConfig& config, const CommandOptions& options, std::ostream& log);
CommandResult cmd_synthesize(const RunConfig& config, const CommandOptions& options, std::ostream& log);
CommandResult cmd_oracle(const RunConfig& config, const CommandOptions& options, std::ostream& log);
CommandResult cmd_report(const RunConfig& config, const CommandOptions& options, std::ostream& log);

/// Loads the config, dispatches by name and maps errors to exit codes.
int run_command(const std::string& name, const std::string& config_path, const CommandOptions& options,
                std::ostream& log);

}  // namespace mrf
