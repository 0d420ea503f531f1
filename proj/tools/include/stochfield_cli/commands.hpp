#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stochfield_cli/config.hpp"

namespace stochfield::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // I/O and other unexpected errors
  kExitConfig = 2,
  kExitNumerical = 3,
  kExitVerification = 4,
};

struct CommandOptions {
  std::string config_path;
  std::string out_dir;  // overrides output.dir when set
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trajectories;
  std::uint64_t trajectory_id = 0;
  std::string replay;  // simulate: noise file to replay instead of sampling
  bool quiet = false;
  std::vector<int> only;  // verify: subset of criteria
  std::string input, output;  // export
};

/// Applies command-line overrides on top of the parsed file.
RunConfig effective_config(const CommandOptions& opt);

int cmd_simulate(const RunConfig& config, const CommandOptions& opt);
int cmd_ensemble(const RunConfig& config, const CommandOptions& opt);
int cmd_lindblad(const RunConfig& config, const CommandOptions& opt);
int cmd_verify(const CommandOptions& opt);
int cmd_export(const CommandOptions& opt);

/// Entry point of the `stochfield` executable; maps exceptions to exit codes.
int run_cli(int argc, char** argv);

}  // namespace stochfield::cli
