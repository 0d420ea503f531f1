#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "stochfield/kernel.hpp"
#include "stochfield/lattice.hpp"
#include "stochfield/noise.hpp"

namespace stochfield {

/// Classical mode amplitude φ(p) and velocity π(p) = ∂_t φ(p), one per dof.
struct ClassicalDof {
  Complex phi{};
  Complex pi{};
};

struct ClassicalState {
  double t = 0.0;
  std::uint64_t step = 0;
  std::vector<ClassicalDof> dofs;
};

ClassicalState classical_rest_state(const ModeTable& table);

/// Velocity kick π += λ conj(dW(p)) followed by the exact harmonic rotation
/// over dt at frequency E_p.
ClassicalState classical_step_exact(const ModeTable& table, const ClassicalState& state, const NoiseSlice& slice,
                                    double lambda);

/// dφ = π dt, dπ = -E² φ dt + λ conj(dW).
ClassicalState classical_step_em(const ModeTable& table, const ClassicalState& state, const NoiseSlice& slice,
                                 double lambda);

/// (2π)^(2 dim)/(2Ω) Σ_full (|π|² + E²|φ|²).
double classical_energy(const ModeTable& table, const ClassicalState& state);

/// Integrates from rest over the dynamics grid and reports every snapshot.
void run_classical(const ModeTable& table, const DynamicsConfig& dynamics, Scheme scheme, const NoiseSource& noise,
                   const std::function<void(const ClassicalState&)>& observe);

struct EhrenfestConfig {
  DynamicsConfig dynamics;  // quantum side; dynamics.scheme selects its scheme
  Scheme classical_scheme = Scheme::exact;
  double classical_dt = 0.0;  // 0 means "same grid as the quantum side"
};

struct EhrenfestReport {
  double max_discrepancy = 0.0;  // max over (t, mode) of |⟨φ⟩ - φ_classical|
  double scale = 0.0;            // max over (t, mode) of |φ_classical|
  double relative = 0.0;
  double t_at_max = 0.0;
  std::size_t mode_at_max = 0;
  std::uint64_t steps = 0;
};

/// Integrates the kernel engine and the classical field on the same noise
/// and compares ⟨φ(p)⟩ with φ(p) after every step. Requires μ0 = 0 (the
/// classical side starts at rest) and a normalizable initial kernel.
EhrenfestReport ehrenfest_compare(const ModeTable& table, const KernelInit& init, const EhrenfestConfig& config,
                                  const NoiseSource& noise);

}  // namespace stochfield
