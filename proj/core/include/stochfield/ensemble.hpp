#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stochfield/kernel.hpp"
#include "stochfield/lattice.hpp"
#include "stochfield/stats.hpp"

namespace stochfield {

/// Per-snapshot moments of every tracked observable plus per-trajectory
/// scalars (energy slopes). Names:
///   E1, E_total, E_density, [E_classical],
///   E_mode[d], mu_abs2[d], mu_pm_re[d], mu_pm_im[d], phi_re[d], phi_im[d],
///   phi_abs2[d], d the lattice mode id of each dof (when modes are tracked).
/// Scalars: E1_slope, E_total_slope, [E_classical_slope], each the OLS slope
/// of one trajectory's series against t.
struct EnsembleStats {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<Moments> series;  // [time][name]
  std::vector<std::string> scalar_names;
  std::vector<Moments> scalars;

  std::uint64_t count() const;
  std::size_t index_of(const std::string& name) const;  // throws std::out_of_range
  bool has(const std::string& name) const;
  const Moments& at(std::size_t time_index, const std::string& name) const;
  const Moments& scalar(const std::string& name) const;
  std::vector<double> means(const std::string& name) const;
  std::vector<double> stderrs(const std::string& name) const;

  /// Pairwise merge; shapes must agree.
  void merge(const EnsembleStats& other);
};

struct EnsembleOptions {
  std::uint64_t master_seed = 0;
  std::uint64_t first_trajectory = 0;
  std::uint64_t trajectories = 2;
  unsigned workers = 0;  // 0: default_worker_count()
  bool track_modes = true;
  bool track_classical = false;
};

/// STOCHFIELD_THREADS when set, else the hardware concurrency.
unsigned default_worker_count();

/// Runs trajectories [first, first + M) with StreamSpec(master_seed, i).
/// Trajectories are grouped in fixed chunks merged in index order, so the
/// result does not depend on the number of workers. Any trajectory failure
/// aborts the run and is rethrown with its id.
EnsembleStats run_ensemble(const ModeTable& table, const KernelInit& init, const DynamicsConfig& dynamics,
                           const EnsembleOptions& options);

struct EnergyRateReport {
  std::string observable;
  double slope = 0.0;
  double slope_stderr = 0.0;
  double expected_slope = 0.0;
  double z_score = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::uint64_t trajectories = 0;
};

/// Fits the ensemble-mean series of `observable` (E1, E_total or
/// E_classical). The standard error comes from the spread of per-trajectory
/// slopes; the expected slope is λ² N_full / 2.
EnergyRateReport energy_rate(const EnsembleStats& stats, const ModeTable& table, double lambda,
                             const std::string& observable = "E1");

}  // namespace stochfield
