#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace stochfield {

/// Single momentum mode on the Fock space truncated at n_max quanta.
///
/// H = E (n + 1/2) is diagonal (zero-point energy included so that energies
/// compare directly with the wave-functional side); the jump operator is the
/// unit-mass quadrature x = (a + a†)/sqrt(2E), tridiagonal with
/// x_{n,n+1} = sqrt((n+1)/(2E)). With rate λ², -½[x,[x,H]] = ½ gives
/// d⟨H⟩/dt = λ²/2 for any state supported away from the truncation edge.
struct SingleModeGenerator {
  double energy = 1.0;
  double lambda = 0.1;
  int n_max = 60;
  std::vector<double> x_offdiag;  // size n_max

  static SingleModeGenerator make(double energy, double lambda, int n_max);

  int dimension() const { return n_max + 1; }
  Eigen::MatrixXcd hamiltonian() const;
  Eigen::MatrixXcd position() const;
};

struct DensityMatrix {
  double energy = 1.0;
  int n_max = 60;
  Eigen::MatrixXcd rho;

  static DensityMatrix vacuum(double energy, int n_max);
  /// Pure coherent state |α⟩ truncated and renormalized.
  static DensityMatrix coherent(double energy, int n_max, std::complex<double> alpha);
  /// Copy into a larger truncation (new levels unpopulated).
  DensityMatrix embedded(int new_n_max) const;
};

/// -i[H,ρ] + λ²(xρx - ½{x², ρ}), exploiting the tridiagonal x.
Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& rho, const SingleModeGenerator& gen);

struct LindbladSample {
  double t = 0.0;
  double energy = 0.0;
  double x_mean = 0.0;
  double x2_mean = 0.0;
  double trace_err = 0.0;
  double min_eig = 0.0;
};

struct LindbladOptions {
  double dt = 1e-3;
  double t_max = 1.0;
  std::uint64_t stride = 1;
  /// Doubles n_max and reruns when the top level's population exceeds 1e-8.
  bool auto_extend = true;
  int max_doublings = 3;
};

struct LindbladResult {
  std::vector<LindbladSample> series;
  int n_max_used = 0;
  double top_population = 0.0;  // max over time of ρ_{n_max, n_max}
  bool stiffness_warning = false;
};

/// Fixed-step RK4. Throws NumericalError when the minimum eigenvalue drops
/// below -1e-6 (truncation failure).
LindbladResult integrate(const DensityMatrix& rho0, const SingleModeGenerator& gen, const LindbladOptions& options);

LindbladSample measure(const Eigen::MatrixXcd& rho, const SingleModeGenerator& gen, double t);

/// Compares the noise-averaged energy and ⟨x⟩ of M single-mode kernel
/// trajectories (vacuum start, μ0 = 0) with the Lindblad series.
struct UnravelingPoint {
  double t = 0.0;
  double lindblad_energy = 0.0;
  double ensemble_energy = 0.0;
  double energy_stderr = 0.0;
  double energy_z = 0.0;
  double lindblad_x = 0.0;
  double ensemble_x = 0.0;
  double x_stderr = 0.0;
  double x_z = 0.0;
  double lindblad_x2 = 0.0;
  double ensemble_x2 = 0.0;
  double x2_stderr = 0.0;
};

struct UnravelingConfig {
  double energy = 1.0;
  double lambda = 0.3;
  double dt = 0.01;
  double t_max = 10.0;
  std::uint64_t stride = 100;
  std::uint64_t trajectories = 10000;
  std::uint64_t master_seed = 0;
  int n_max = 60;
  unsigned workers = 0;
  double sigma_bound = 3.0;
};

struct UnravelingReport {
  std::vector<UnravelingPoint> points;
  double max_energy_z = 0.0;
  double max_x_z = 0.0;
  bool passed = false;
};

UnravelingReport unraveling_consistency(const UnravelingConfig& config);

}  // namespace stochfield
