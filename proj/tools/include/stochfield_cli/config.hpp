#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stochfield/error.hpp"
#include "stochfield/kernel.hpp"
#include "stochfield/lattice.hpp"

namespace stochfield::cli {

struct InitConfig {
  std::string v0 = "vacuum";  // vacuum | scaled | zero | deterministic | file
  double scale_re = 1.0;
  double scale_im = 0.0;
  std::string v0_file;        // CSV: mode_id, v0_re, v0_im
  std::string mu0 = "zero";   // zero | file
  std::string mu0_file;       // CSV: mode_id, mu_plus_re, mu_plus_im, mu_minus_re, mu_minus_im
};

struct EnsembleConfig {
  std::uint64_t trajectories = 1000;
  std::uint64_t master_seed = 0;
};

struct LindbladConfig {
  int n_max = 60;
  bool enabled = false;
  double energy = 0.0;  // 0: the lattice zero mode, E = mass
  double dt = 0.0;      // 0: dynamics.dt
};

struct OutputConfig {
  std::string dir = "out";
  std::vector<std::string> formats{"csv"};  // csv, noise_bin, noise_csv

  bool wants(std::string_view f) const;
};

struct RunConfig {
  LatticeSpec lattice{3, 8, 8.0, 1.0};
  DynamicsConfig dynamics{0.0, 10.0, 0.1, Scheme::exact, 10};
  bool dt_defaulted = true;
  InitConfig init;
  EnsembleConfig ensemble;
  LindbladConfig lindblad;
  OutputConfig output;
  std::filesystem::path base_dir;  // relative init files resolve against this
};

/// Every violation found while parsing, not just the first.
class ConfigErrors : public ConfigError {
 public:
  explicit ConfigErrors(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

/// Parses and validates TOML text. Unknown keys are errors; missing keys take
/// their defaults, dt defaulting to 0.01 / max E_p.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Re-checks a config after command-line overrides.
void validate(const RunConfig& config);

KernelInit make_init(const RunConfig& config, const ModeTable& table);

double lindblad_energy(const RunConfig& config);

}  // namespace stochfield::cli
