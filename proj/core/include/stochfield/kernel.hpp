#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "stochfield/lattice.hpp"
#include "stochfield/noise.hpp"

namespace stochfield {

// ---------------------------------------------------------------------------
// Closed-form single-mode kernel dynamics
//
// V obeys dV/dt = -iV² + iE². With f(t) = cos(tE) + i (V0/E) sin(tE) the
// solution is V = -i d/dt ln f, so exp(-i ∫_{t1}^{t2} V) = f(t1)/f(t2).
// sin(tE)/E is evaluated as t·sinc(tE), which keeps E = 0 finite.
// ---------------------------------------------------------------------------

Complex riccati_exact(Complex v0, double energy, double t);
Complex riccati_rhs(Complex v, double energy);
Complex phase_fn(Complex v0, double energy, double t);
/// f(t1)/f(t2); throws NumericalError when f(t2) vanishes.
Complex propagator(Complex v0, double energy, double t1, double t2);

/// Ito/Euler-Maruyama: mu + (-i dt mu V + i λ dW).
Complex mu_step_em(Complex mu, Complex v, Complex dw, double dt, double lambda);
/// Kick then propagate: prop · (mu + i λ dW).
Complex mu_step_exact(Complex mu, Complex dw, Complex prop, double lambda);

/// Initial quadratic kernel for one dof. `zero` (V0 = 0) and `deterministic`
/// (V0 → ∞) are the analytic edge cases with V = iE tan(tE) and
/// V = -iE cot(tE); they are not normalizable.
struct InitialKernel {
  enum class Kind { finite, zero, deterministic };
  Kind kind = Kind::finite;
  Complex v0{};

  static InitialKernel finite_value(Complex v) { return {Kind::finite, v}; }
  static InitialKernel zero() { return {Kind::zero, {}}; }
  static InitialKernel deterministic() { return {Kind::deterministic, {}}; }

  bool normalizable() const { return kind == Kind::finite && v0.real() > 0.0; }
};

/// V(t) for a tagged initial kernel; throws NumericalError at singular times.
Complex quadratic_kernel(const InitialKernel& init, double energy, double t);
/// f(t) up to a constant factor (the factor cancels in every propagator).
Complex phase(const InitialKernel& init, double energy, double t);
Complex propagator(const InitialKernel& init, double energy, double t1, double t2);
/// True when V diverges somewhere in (t1, t2].
bool singular_between(const InitialKernel& init, double energy, double t1, double t2);

// ---------------------------------------------------------------------------
// Lattice state
// ---------------------------------------------------------------------------

struct KernelInit {
  std::vector<InitialKernel> v0;  // per dof
  std::vector<Complex> mu0_plus;  // μ0(p) per dof
  std::vector<Complex> mu0_minus; // μ0(-p) per dof; equals mu0_plus on self-conjugate dofs

  static KernelInit vacuum(const ModeTable& table);
  /// V0 = c·E_p; requires Re c > 0.
  static KernelInit scaled(const ModeTable& table, Complex c);
  static KernelInit zero(const ModeTable& table);
  static KernelInit deterministic(const ModeTable& table);
  static KernelInit custom(const ModeTable& table, std::vector<InitialKernel> v0);

  bool normalizable() const;
  bool mu0_is_zero() const;
  void validate(const ModeTable& table) const;
};

/// Kernels of one dof. For a self-conjugate dof mu_minus mirrors mu_plus.
struct DofKernel {
  Complex v{};
  Complex mu_plus{};
  Complex mu_minus{};
};

struct KernelState {
  double t = 0.0;
  std::uint64_t step = 0;
  std::vector<DofKernel> dofs;
};

enum class Scheme { exact, euler };

const char* to_string(Scheme s);

struct DynamicsConfig {
  double dt = 1e-3;
  double t_max = 1.0;
  double lambda = 0.1;
  Scheme scheme = Scheme::exact;
  std::uint64_t snapshot_stride = 1;

  /// Number of steps on the uniform grid t_n = n·dt covering [0, t_max].
  std::uint64_t step_count() const;
  bool is_snapshot(std::uint64_t step) const;
  void validate() const;
};

KernelState initial_state(const ModeTable& table, const KernelInit& init);

/// One step from t_n to t_{n+1}. V is always advanced in closed form; μ(p)
/// is driven by dW(p), μ(-p) by conj(dW(p)).
KernelState evolve(const ModeTable& table, const KernelState& state, const NoiseSlice& slice,
                   const KernelInit& init, Scheme scheme, double lambda);

/// Stepper for repeated trajectories sharing (table, init, dynamics). The
/// deterministic part of each step (propagators and V on the grid) is
/// evaluated once and reused; results are bit-identical to `evolve`.
class KernelEngine {
 public:
  KernelEngine(const ModeTable& table, KernelInit init, DynamicsConfig dynamics);

  const ModeTable& table() const { return *table_; }
  const KernelInit& init() const { return init_; }
  const DynamicsConfig& dynamics() const { return dynamics_; }
  std::uint64_t step_count() const { return steps_; }

  KernelState initial() const { return initial_state(*table_, init_); }

  /// Advances `state` in place by one step using `slice`.
  void step(KernelState& state, const NoiseSlice& slice) const;

  /// Runs [0, t_max] and calls `observe` on every snapshot (step 0 included).
  void run(const NoiseSource& noise, const std::function<void(const KernelState&)>& observe) const;

 private:
  Complex propagator_at(std::uint64_t step, std::size_t dof) const;
  Complex kernel_at(std::uint64_t step, std::size_t dof) const;

  const ModeTable* table_;
  KernelInit init_;
  DynamicsConfig dynamics_;
  std::uint64_t steps_ = 0;
  bool cached_ = false;
  std::vector<Complex> prop_cache_;    // [step][dof], step in [0, steps)
  std::vector<Complex> kernel_cache_;  // [step][dof], step in [0, steps]
};

/// Strided snapshots of one trajectory.
std::vector<KernelState> run_trajectory(const ModeTable& table, const KernelInit& init,
                                        const DynamicsConfig& dynamics, const NoiseSource& noise);

}  // namespace stochfield
