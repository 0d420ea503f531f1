#include <cmath>

#include "stochfield/ensemble.hpp"
#include "stochfield/error.hpp"
#include "stochfield/lindblad.hpp"

namespace stochfield {

// A single self-conjugate mode: dim = 1, N_s = 2, L = 2π. The zero mode has
// E = mass; the Nyquist mode rides along but is not compared. The unit-mass
// quadrature of the Fock description is x = sqrt(c)·φ(0) with c the kernel
// measure, so ⟨x⟩ = sqrt(c)⟨φ⟩ and ⟨x²⟩ = 1/(2 Re V) + c⟨φ⟩².
UnravelingReport unraveling_consistency(const UnravelingConfig& cfg) {
  if (!(cfg.energy > 0.0)) throw ConfigError("unraveling: energy must be > 0");
  if (!(cfg.dt > 0.0) || !(cfg.t_max > 0.0)) throw ConfigError("unraveling: dt and t_max must be > 0");
  if (cfg.stride < 1) throw ConfigError("unraveling: stride must be >= 1");

  LatticeSpec spec;
  spec.dim = 1;
  spec.sites_per_dim = 2;
  spec.box_length = kTwoPi;
  spec.mass = cfg.energy;
  const ModeTable table(spec);
  const std::size_t dof = table.dof_of(table.find(IndexVec{0, 0, 0}));
  if (std::abs(table.dof_mode(dof).energy - cfg.energy) > 1e-14 * cfg.energy)
    throw ConventionError("unraveling: zero mode energy differs from requested E");
  const double c = spec.kernel_measure();

  DynamicsConfig dyn;
  dyn.dt = cfg.dt;
  dyn.t_max = cfg.t_max;
  dyn.lambda = cfg.lambda;
  dyn.scheme = Scheme::exact;
  dyn.snapshot_stride = cfg.stride;

  EnsembleOptions opt;
  opt.master_seed = cfg.master_seed;
  opt.trajectories = cfg.trajectories;
  opt.workers = cfg.workers;
  const EnsembleStats stats = run_ensemble(table, KernelInit::vacuum(table), dyn, opt);

  // Sub-step the master equation so that RK4 stays far from its stability edge.
  const double stiff = cfg.dt * (cfg.n_max * cfg.energy + cfg.lambda * cfg.lambda * cfg.n_max / cfg.energy);
  const std::uint64_t sub = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(stiff / 0.1)));
  LindbladOptions lopt;
  lopt.dt = cfg.dt / static_cast<double>(sub);
  lopt.t_max = static_cast<double>(dyn.step_count()) * cfg.dt;
  lopt.stride = cfg.stride * sub;
  const LindbladResult lind = integrate(DensityMatrix::vacuum(cfg.energy, cfg.n_max),
                                        SingleModeGenerator::make(cfg.energy, cfg.lambda, cfg.n_max), lopt);
  if (lind.series.size() != stats.times.size()) throw ConventionError("unraveling: output grids differ");

  const std::string d = "[" + std::to_string(table.dofs()[dof]) + "]";
  UnravelingReport rep;
  rep.passed = true;
  const double vr = cfg.energy;  // vacuum kernel stays at V = E
  for (std::size_t i = 0; i < stats.times.size(); ++i) {
    UnravelingPoint p;
    p.t = stats.times[i];
    const Moments& e = stats.at(i, "E_mode" + d);
    const Moments& phi = stats.at(i, "phi_re" + d);
    const Moments& phi2 = stats.at(i, "phi_abs2" + d);
    p.lindblad_energy = lind.series[i].energy;
    p.ensemble_energy = e.mean;
    p.energy_stderr = e.stderr_mean();
    p.lindblad_x = lind.series[i].x_mean;
    p.ensemble_x = std::sqrt(c) * phi.mean;
    p.x_stderr = std::sqrt(c) * phi.stderr_mean();
    p.lindblad_x2 = lind.series[i].x2_mean;
    p.ensemble_x2 = 1.0 / (2.0 * vr) + c * phi2.mean;
    p.x2_stderr = c * phi2.stderr_mean();

    auto z = [](double a, double b, double se) {
      const double diff = std::abs(a - b);
      if (se > 0.0) return diff / se;
      return diff <= 1e-12 * std::max(1.0, std::abs(b)) ? 0.0 : INFINITY;
    };
    p.energy_z = z(p.ensemble_energy, p.lindblad_energy, p.energy_stderr);
    p.x_z = z(p.ensemble_x, p.lindblad_x, p.x_stderr);
    rep.max_energy_z = std::max(rep.max_energy_z, p.energy_z);
    rep.max_x_z = std::max(rep.max_x_z, p.x_z);
    rep.points.push_back(p);
  }
  rep.passed = rep.max_energy_z <= cfg.sigma_bound && rep.max_x_z <= cfg.sigma_bound;
  return rep;
}

}  // namespace stochfield
