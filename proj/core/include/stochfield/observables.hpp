#pragma once

#include <vector>

#include "stochfield/kernel.hpp"
#include "stochfield/lattice.hpp"

namespace stochfield {

/// Parameters of the Gaussian probability density |Ψ|² per dof. For an
/// independent dof the two quadratures φ_R, φ_I share `variance`; for a
/// self-conjugate dof only the real amplitude exists (center_im = 0).
struct DensityParams {
  std::vector<double> center_re;
  std::vector<double> center_im;
  std::vector<double> variance;
};

struct ObservableRecord {
  double t = 0.0;
  std::vector<Complex> field_expectation;  // per dof
  std::vector<double> variance;            // per dof, as in DensityParams
  double e0 = 0.0;
  double e1 = 0.0;
  double e_total = 0.0;
  double e_density = 0.0;
};

/// ⟨φ(p)⟩ = (conj μ(p) + μ(-p)) / (2 Re V); on self-conjugate dofs this is
/// Re μ / Re V. Throws DegenerateKernelError when Re V is not positive.
Complex field_expectation(const ModeTable& table, const KernelState& state, std::size_t dof);

/// Ω / (4 (2π)^(2 dim) Re V) per quadrature of an independent dof; the single
/// real amplitude of a self-conjugate dof has twice that.
double field_variance(const ModeTable& table, const KernelState& state, std::size_t dof);

DensityParams density_params(const ModeTable& table, const KernelState& state);

/// ⟨φ(p)⟩ on every lattice mode (dependent modes are conjugates).
std::vector<Complex> full_field_expectation(const ModeTable& table, const KernelState& state);

/// Noise-independent energy Σ_full (E_p² + |V0|²) / (4 Re V0).
double energy_free(const ModeTable& table, const KernelInit& init);

/// Same quantity evaluated from V(t) through the Gaussian width; constant in
/// time when the kernel follows the closed form.
double energy_free_at(const ModeTable& table, const KernelState& state);

/// Noise-induced energy carried by the linear kernel,
///   c Σ_full [ ½(E² - V²)|⟨φ⟩|² - ½ μ(p)μ(-p) + μ(p) V ⟨φ(p)⟩ ],
/// c = (2π)^(2 dim)/Ω. Zero when μ ≡ 0. Throws ConventionError when the
/// imaginary residue exceeds 1e-10 of the term magnitudes.
double energy_noise(const ModeTable& table, const KernelState& state);

/// ⟨H⟩ restricted to the modes of one dof (both p and -p for an independent dof).
double mode_energy(const ModeTable& table, const KernelState& state, std::size_t dof);

ObservableRecord observe(const ModeTable& table, const KernelState& state, const KernelInit& init);

/// Noise-ensemble predictions for μ0 = 0:
///   mean[μ(p)μ(-p)] = -λ² Ω/(2π)^(2 dim) ∫_0^t (f(τ)/f(t))² dτ
///   mean[|μ(p)|²]   =  λ² Ω/(2π)^(2 dim) ∫_0^t |f(τ)/f(t)|² dτ
/// evaluated by adaptive Gauss-Kronrod quadrature.
struct MuCorrelators {
  Complex mu_pm{};
  double mu_abs2 = 0.0;
};

MuCorrelators ensemble_mu_correlators(const LatticeSpec& spec, const InitialKernel& init, double energy,
                                      double lambda, double t);

}  // namespace stochfield
