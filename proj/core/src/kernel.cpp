#include "stochfield/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "stochfield/error.hpp"

namespace stochfield {

namespace {

constexpr Complex kI{0.0, 1.0};

// sin(tE)/E, finite at E = 0.
double sin_over_e(double energy, double t) {
  const double x = t * energy;
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return t * (1.0 - x2 / 6.0 * (1.0 - x2 / 20.0));
  }
  return std::sin(x) / energy;
}

void require_nonsingular(Complex f, double scale, const char* what, double t) {
  if (!(std::abs(f) > 1e-13 * scale) || !std::isfinite(std::abs(f))) {
    std::ostringstream msg;
    msg << what << ": singular kernel denominator at t=" << t;
    throw NumericalError(msg.str());
  }
}

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

Complex riccati_rhs(Complex v, double energy) { return -kI * v * v + kI * energy * energy; }

Complex phase_fn(Complex v0, double energy, double t) {
  return std::cos(t * energy) + kI * v0 * sin_over_e(energy, t);
}

Complex riccati_exact(Complex v0, double energy, double t) {
  if (v0 == Complex{energy, 0.0}) return v0;  // fixed point, kept exact
  const double c = std::cos(t * energy);
  const double s = sin_over_e(energy, t);
  const Complex den = c + kI * v0 * s;
  require_nonsingular(den, 1.0 + std::abs(v0 * s), "riccati_exact", t);
  return (v0 * c + kI * energy * energy * s) / den;
}

Complex propagator(Complex v0, double energy, double t1, double t2) {
  if (t1 == t2) return {1.0, 0.0};
  const Complex f2 = phase_fn(v0, energy, t2);
  require_nonsingular(f2, 1.0 + std::abs(v0 * sin_over_e(energy, t2)), "propagator", t2);
  return phase_fn(v0, energy, t1) / f2;
}

Complex mu_step_em(Complex mu, Complex v, Complex dw, double dt, double lambda) {
  return mu + (-kI * dt * mu * v + kI * lambda * dw);
}

Complex mu_step_exact(Complex mu, Complex dw, Complex prop, double lambda) {
  return prop * (mu + kI * lambda * dw);
}

Complex quadratic_kernel(const InitialKernel& init, double energy, double t) {
  switch (init.kind) {
    case InitialKernel::Kind::finite:
      return riccati_exact(init.v0, energy, t);
    case InitialKernel::Kind::zero: {
      const double c = std::cos(t * energy);
      require_nonsingular(c, 1.0, "quadratic_kernel(zero)", t);
      return kI * energy * energy * sin_over_e(energy, t) / c;
    }
    case InitialKernel::Kind::deterministic: {
      const double s = sin_over_e(energy, t);
      require_nonsingular(s, std::max(1.0, std::abs(t)), "quadratic_kernel(deterministic)", t);
      return -kI * std::cos(t * energy) / s;
    }
  }
  throw std::logic_error("unknown kernel kind");
}

Complex phase(const InitialKernel& init, double energy, double t) {
  switch (init.kind) {
    case InitialKernel::Kind::finite: return phase_fn(init.v0, energy, t);
    case InitialKernel::Kind::zero: return std::cos(t * energy);
    case InitialKernel::Kind::deterministic: return sin_over_e(energy, t);
  }
  throw std::logic_error("unknown kernel kind");
}

Complex propagator(const InitialKernel& init, double energy, double t1, double t2) {
  if (init.kind == InitialKernel::Kind::finite) return propagator(init.v0, energy, t1, t2);
  const Complex f2 = phase(init, energy, t2);
  require_nonsingular(f2, std::max(1.0, std::abs(t2)), "propagator", t2);
  return phase(init, energy, t1) / f2;
}

bool singular_between(const InitialKernel& init, double energy, double t1, double t2) {
  if (t2 <= t1) return false;
  const double pi = kTwoPi / 2.0;
  switch (init.kind) {
    case InitialKernel::Kind::zero: {
      if (energy == 0.0) return false;
      // zeros of cos(tE) at (k + 1/2) π / E
      const double k = std::floor(t1 * energy / pi - 0.5) + 1.0;
      return (k + 0.5) * pi <= t2 * energy;
    }
    case InitialKernel::Kind::deterministic: {
      if (energy == 0.0) return t1 < 0.0 && t2 >= 0.0;
      const double k = std::floor(t1 * energy / pi) + 1.0;
      return k * pi <= t2 * energy;
    }
    case InitialKernel::Kind::finite: {
      if (init.v0.real() > 0.0) return false;
      // Re V0 <= 0: f is real up to a constant phase; look for a sign change.
      const Complex f1 = phase_fn(init.v0, energy, t1);
      const Complex f2 = phase_fn(init.v0, energy, t2);
      return std::abs(f2) < 1e-13 || std::real(f1 * std::conj(f2)) < 0.0;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------

KernelInit KernelInit::vacuum(const ModeTable& table) { return scaled(table, 1.0); }

KernelInit KernelInit::scaled(const ModeTable& table, Complex c) {
  if (!(c.real() > 0.0)) throw ConfigError("scaled initial kernel requires Re c > 0");
  std::vector<InitialKernel> v0;
  v0.reserve(table.dof_count());
  for (std::size_t k = 0; k < table.dof_count(); ++k) {
    v0.push_back(InitialKernel::finite_value(c * table.dof_mode(k).energy));
  }
  return custom(table, std::move(v0));
}

KernelInit KernelInit::zero(const ModeTable& table) {
  return custom(table, std::vector<InitialKernel>(table.dof_count(), InitialKernel::zero()));
}

KernelInit KernelInit::deterministic(const ModeTable& table) {
  return custom(table, std::vector<InitialKernel>(table.dof_count(), InitialKernel::deterministic()));
}

KernelInit KernelInit::custom(const ModeTable& table, std::vector<InitialKernel> v0) {
  KernelInit init;
  init.v0 = std::move(v0);
  init.mu0_plus.assign(table.dof_count(), Complex{});
  init.mu0_minus.assign(table.dof_count(), Complex{});
  init.validate(table);
  return init;
}

bool KernelInit::normalizable() const {
  for (const auto& k : v0) {
    if (!k.normalizable()) return false;
  }
  return true;
}

bool KernelInit::mu0_is_zero() const {
  for (std::size_t k = 0; k < mu0_plus.size(); ++k) {
    if (mu0_plus[k] != Complex{} || mu0_minus[k] != Complex{}) return false;
  }
  return true;
}

void KernelInit::validate(const ModeTable& table) const {
  const std::size_t n = table.dof_count();
  if (v0.size() != n || mu0_plus.size() != n || mu0_minus.size() != n) {
    throw std::invalid_argument("KernelInit: per-dof arrays do not match the mode table");
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (table.dof_mode(k).cls == ModeClass::self_conjugate && mu0_plus[k] != mu0_minus[k]) {
      throw std::invalid_argument("KernelInit: self-conjugate dof needs mu0(p) == mu0(-p)");
    }
    if (v0[k].kind == InitialKernel::Kind::finite && !finite(v0[k].v0)) {
      throw std::invalid_argument("KernelInit: non-finite V0");
    }
  }
}

const char* to_string(Scheme s) { return s == Scheme::exact ? "exact" : "euler"; }

std::uint64_t DynamicsConfig::step_count() const {
  if (t_max <= 0.0) return 0;
  return static_cast<std::uint64_t>(std::ceil(t_max / dt - 1e-9));
}

bool DynamicsConfig::is_snapshot(std::uint64_t step) const {
  return step % snapshot_stride == 0 || step == step_count();
}

void DynamicsConfig::validate() const {
  std::ostringstream msg;
  if (!(dt > 0.0) || !std::isfinite(dt)) msg << "dt must be > 0; ";
  if (!(t_max >= 0.0) || !std::isfinite(t_max)) msg << "t_max must be >= 0; ";
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) msg << "lambda must be ≥ 0; ";
  if (snapshot_stride < 1) msg << "snapshot_stride must be >= 1; ";
  if (auto s = msg.str(); !s.empty()) throw ConfigError(s.substr(0, s.size() - 2));
}

namespace {

// V at t = 0; the deterministic kernel starts at -i∞.
Complex initial_kernel_value(const InitialKernel& init) {
  switch (init.kind) {
    case InitialKernel::Kind::finite: return init.v0;
    case InitialKernel::Kind::zero: return {};
    case InitialKernel::Kind::deterministic: return {0.0, -std::numeric_limits<double>::infinity()};
  }
  return {};
}

Complex kernel_on_grid(const InitialKernel& init, double energy, std::uint64_t step, double dt) {
  if (step == 0) return initial_kernel_value(init);
  return quadratic_kernel(init, energy, static_cast<double>(step) * dt);
}

void check_singular(const ModeTable& table, const KernelInit& init, std::uint64_t step, double dt) {
  const double t1 = static_cast<double>(step) * dt;
  const double t2 = static_cast<double>(step + 1) * dt;
  for (std::size_t k = 0; k < table.dof_count(); ++k) {
    if (singular_between(init.v0[k], table.dof_mode(k).energy, t1, t2)) {
      std::ostringstream msg;
      msg << "kernel of mode " << table.dofs()[k] << " diverges within step " << step << " (t in (" << t1 << ", "
          << t2 << "])";
      throw NumericalError(msg.str());
    }
  }
}

void check_finite(const KernelState& s) {
  for (std::size_t k = 0; k < s.dofs.size(); ++k) {
    const DofKernel& d = s.dofs[k];
    if (!finite(d.v) || !finite(d.mu_plus) || !finite(d.mu_minus)) {
      std::ostringstream msg;
      msg << "non-finite kernel at step " << s.step << " (dof " << k << ")";
      throw NumericalError(msg.str());
    }
  }
}

void check_step_inputs(const ModeTable& table, const KernelState& state, const NoiseSlice& slice, double dt) {
  if (slice.increments.size() != table.dof_count() || state.dofs.size() != table.dof_count()) {
    throw std::invalid_argument("evolve: state/slice sizes do not match the mode table");
  }
  if (slice.dt != dt) throw std::invalid_argument("evolve: slice dt does not match the time grid");
  const double t_grid = static_cast<double>(state.step) * dt;
  if (std::abs(state.t - t_grid) > 1e-9 * std::max(1.0, std::abs(t_grid))) {
    throw std::invalid_argument("evolve: state time is off the uniform grid");
  }
}

inline void advance_dof(DofKernel& d, Complex dw, Complex prop, Complex v_now, Complex v_next, Scheme scheme,
                        double dt, double lambda, bool self_conjugate) {
  if (scheme == Scheme::exact) {
    d.mu_plus = mu_step_exact(d.mu_plus, dw, prop, lambda);
    d.mu_minus = self_conjugate ? d.mu_plus : mu_step_exact(d.mu_minus, std::conj(dw), prop, lambda);
  } else {
    d.mu_plus = mu_step_em(d.mu_plus, v_now, dw, dt, lambda);
    d.mu_minus = self_conjugate ? d.mu_plus : mu_step_em(d.mu_minus, v_now, std::conj(dw), dt, lambda);
  }
  d.v = v_next;
}

void require_euler_compatible(const KernelInit& init, Scheme scheme) {
  if (scheme != Scheme::euler) return;
  for (const auto& k : init.v0) {
    if (k.kind != InitialKernel::Kind::finite) {
      throw std::invalid_argument("euler scheme requires finite initial kernels (zero/deterministic need exact)");
    }
  }
}

}  // namespace

KernelState initial_state(const ModeTable& table, const KernelInit& init) {
  init.validate(table);
  KernelState s;
  s.dofs.resize(table.dof_count());
  for (std::size_t k = 0; k < table.dof_count(); ++k) {
    s.dofs[k].v = initial_kernel_value(init.v0[k]);
    s.dofs[k].mu_plus = init.mu0_plus[k];
    s.dofs[k].mu_minus = init.mu0_minus[k];
  }
  return s;
}

KernelState evolve(const ModeTable& table, const KernelState& state, const NoiseSlice& slice,
                   const KernelInit& init, Scheme scheme, double lambda) {
  const double dt = slice.dt;
  check_step_inputs(table, state, slice, dt);
  require_euler_compatible(init, scheme);
  check_singular(table, init, state.step, dt);
  const double t1 = static_cast<double>(state.step) * dt;
  const double t2 = static_cast<double>(state.step + 1) * dt;
  KernelState next = state;
  for (std::size_t k = 0; k < table.dof_count(); ++k) {
    const Mode& m = table.dof_mode(k);
    const Complex prop = scheme == Scheme::exact ? propagator(init.v0[k], m.energy, t1, t2) : Complex{};
    advance_dof(next.dofs[k], slice.increments[k], prop, state.dofs[k].v,
                kernel_on_grid(init.v0[k], m.energy, state.step + 1, dt), scheme, dt, lambda,
                m.cls == ModeClass::self_conjugate);
  }
  next.step = state.step + 1;
  next.t = t2;
  check_finite(next);
  return next;
}

KernelEngine::KernelEngine(const ModeTable& table, KernelInit init, DynamicsConfig dynamics)
    : table_(&table), init_(std::move(init)), dynamics_(dynamics) {
  dynamics_.validate();
  init_.validate(table);
  require_euler_compatible(init_, dynamics_.scheme);
  steps_ = dynamics_.step_count();
  const std::size_t n = table.dof_count();
  constexpr std::size_t kMaxCached = std::size_t{1} << 22;
  if ((steps_ + 1) * n > kMaxCached) return;

  // Singular steps are not cached; step() re-evaluates and reports them.
  for (std::uint64_t s = 0; s < steps_; ++s) {
    try {
      check_singular(table, init_, s, dynamics_.dt);
    } catch (const NumericalError&) {
      return;
    }
  }
  prop_cache_.resize(steps_ * n);
  kernel_cache_.resize((steps_ + 1) * n);
  const double dt = dynamics_.dt;
  for (std::uint64_t s = 0; s <= steps_; ++s) {
    for (std::size_t k = 0; k < n; ++k) {
      const double e = table.dof_mode(k).energy;
      kernel_cache_[s * n + k] = kernel_on_grid(init_.v0[k], e, s, dt);
      if (s < steps_ && dynamics_.scheme == Scheme::exact) {
        prop_cache_[s * n + k] =
            propagator(init_.v0[k], e, static_cast<double>(s) * dt, static_cast<double>(s + 1) * dt);
      }
    }
  }
  cached_ = true;
}

Complex KernelEngine::propagator_at(std::uint64_t step, std::size_t dof) const {
  if (cached_) return prop_cache_[step * table_->dof_count() + dof];
  const double dt = dynamics_.dt;
  return propagator(init_.v0[dof], table_->dof_mode(dof).energy, static_cast<double>(step) * dt,
                    static_cast<double>(step + 1) * dt);
}

Complex KernelEngine::kernel_at(std::uint64_t step, std::size_t dof) const {
  if (cached_) return kernel_cache_[step * table_->dof_count() + dof];
  return kernel_on_grid(init_.v0[dof], table_->dof_mode(dof).energy, step, dynamics_.dt);
}

void KernelEngine::step(KernelState& state, const NoiseSlice& slice) const {
  const double dt = dynamics_.dt;
  check_step_inputs(*table_, state, slice, dt);
  if (!cached_) check_singular(*table_, init_, state.step, dt);
  if (state.step >= steps_ && cached_) {
    throw std::out_of_range("KernelEngine::step: past the configured time grid");
  }
  const std::size_t n = table_->dof_count();
  const bool exact = dynamics_.scheme == Scheme::exact;
  for (std::size_t k = 0; k < n; ++k) {
    const bool sc = table_->dof_mode(k).cls == ModeClass::self_conjugate;
    const Complex prop = exact ? propagator_at(state.step, k) : Complex{};
    advance_dof(state.dofs[k], slice.increments[k], prop, state.dofs[k].v, kernel_at(state.step + 1, k),
                dynamics_.scheme, dt, dynamics_.lambda, sc);
  }
  ++state.step;
  state.t = static_cast<double>(state.step) * dt;
  check_finite(state);
}

void KernelEngine::run(const NoiseSource& noise, const std::function<void(const KernelState&)>& observe) const {
  KernelState state = initial();
  observe(state);
  NoiseSlice slice;
  for (std::uint64_t s = 0; s < steps_; ++s) {
    noise.fill(s, slice);
    try {
      step(state, slice);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " [failing step " + std::to_string(s) + "]");
    }
    if (dynamics_.is_snapshot(state.step)) observe(state);
  }
}

std::vector<KernelState> run_trajectory(const ModeTable& table, const KernelInit& init,
                                        const DynamicsConfig& dynamics, const NoiseSource& noise) {
  KernelEngine engine(table, init, dynamics);
  std::vector<KernelState> out;
  engine.run(noise, [&](const KernelState& s) { out.push_back(s); });
  return out;
}

}  // namespace stochfield
