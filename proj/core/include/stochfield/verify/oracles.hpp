#pragma once

// Independent reference computations used to cross-check the library.
// Nothing here calls into the code it checks.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "stochfield/lattice.hpp"

namespace stochfield::verify {

/// Classical RK4 for dV/dt = -iV² + iE² from V(0) = v0 over [0, t].
Complex rk4_riccati(Complex v0, double energy, double t, std::size_t steps);

/// RK4 trajectory sampled at `samples` + 1 evenly spaced times in [0, t].
std::vector<Complex> rk4_riccati_path(Complex v0, double energy, double t, std::size_t steps_per_sample,
                                      std::size_t samples);

/// Adaptive Simpson on a complex integrand.
Complex adaptive_simpson(const std::function<Complex(double)>& f, double a, double b, double tol, int max_depth = 40);

/// z-score of a sample variance against a known variance, from
/// (n-1)s²/σ² ~ χ²(n-1) in its normal approximation.
double chi2_variance_z(double sample_variance, std::uint64_t n, double true_variance);

/// z-score of a sample mean against zero given the sample standard error.
double mean_z(double mean, double stderr_mean, double expected = 0.0);

/// Anderson-Darling statistic of samples against N(0,1) (fully specified).
double anderson_darling_normal(std::vector<double> z);

/// Asymptotic upper-tail probability P(A² > a2) (Marsaglia & Marsaglia).
double anderson_darling_pvalue(double a2);

/// A² whose tail probability is the two-sided 5σ level, p ≈ 5.733e-7.
inline constexpr double kAndersonDarling5Sigma = 11.0627;

/// Naive O(N²) transforms with the library's normalization:
/// φ(x) = Δp^dim Σ_p φ(p) e^{ip·x}, φ(p) = a^dim (2π)^-dim Σ_x φ(x) e^{-ip·x}.
std::vector<Complex> direct_momentum_to_position(const ModeTable& table, std::span<const Complex> full);
std::vector<Complex> direct_position_to_momentum(const ModeTable& table, std::span<const Complex> field);

}  // namespace stochfield::verify
