#include "stochfield/observables.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <sstream>

#include "stochfield/error.hpp"

namespace stochfield {

namespace {

double positive_real_part(const Complex& v, std::size_t dof) {
  if (!(v.real() > 1e-12 * std::abs(v)) || !std::isfinite(v.real())) {
    std::ostringstream msg;
    msg << "degenerate quadratic kernel on dof " << dof << " (Re V = " << v.real() << ")";
    throw DegenerateKernelError(msg.str());
  }
  return v.real();
}

double checked_real(Complex value, double magnitude, const char* what) {
  if (std::abs(value.imag()) > 1e-10 * magnitude + 1e-300) {
    std::ostringstream msg;
    msg << what << ": imaginary residue " << value.imag() << " against magnitude " << magnitude;
    throw ConventionError(msg.str());
  }
  return value.real();
}

bool self_conjugate(const ModeTable& table, std::size_t dof) {
  return table.dof_mode(dof).cls == ModeClass::self_conjugate;
}

// Width part of ⟨H⟩ for one dof (complex; imaginary part cancels).
Complex free_term(const ModeTable& table, const KernelState& state, std::size_t dof) {
  const Complex v = state.dofs[dof].v;
  const double vr = positive_real_part(v, dof);
  const double e = table.dof_mode(dof).energy;
  const Complex per_mode = 0.5 * v + (e * e - v * v) / (4.0 * vr);
  return static_cast<double>(table.multiplicity(dof)) * per_mode;
}

// Linear-kernel part of ⟨H⟩ for one dof, with the sum of term magnitudes.
std::pair<Complex, double> noise_term(const ModeTable& table, const KernelState& state, std::size_t dof) {
  const DofKernel& d = state.dofs[dof];
  const double c = table.spec().kernel_measure();
  const double e = table.dof_mode(dof).energy;
  const Complex phi = field_expectation(table, state, dof);
  const Complex width = e * e - d.v * d.v;
  Complex a, b, g;
  if (self_conjugate(table, dof)) {
    a = 0.5 * width * std::norm(phi);
    b = -0.5 * d.mu_plus * d.mu_plus;
    g = d.mu_plus * d.v * phi;
  } else {
    a = width * std::norm(phi);
    b = -d.mu_plus * d.mu_minus;
    g = d.v * (d.mu_plus * phi + d.mu_minus * std::conj(phi));
  }
  return {c * (a + b + g), c * (std::abs(a) + std::abs(b) + std::abs(g))};
}

}  // namespace

Complex field_expectation(const ModeTable& table, const KernelState& state, std::size_t dof) {
  const DofKernel& d = state.dofs.at(dof);
  const double vr = positive_real_part(d.v, dof);
  if (self_conjugate(table, dof)) return d.mu_plus.real() / vr;
  return (std::conj(d.mu_plus) + d.mu_minus) / (2.0 * vr);
}

double field_variance(const ModeTable& table, const KernelState& state, std::size_t dof) {
  const double vr = positive_real_part(state.dofs.at(dof).v, dof);
  const double per_quadrature = 1.0 / (4.0 * table.spec().kernel_measure() * vr);
  return self_conjugate(table, dof) ? 2.0 * per_quadrature : per_quadrature;
}

DensityParams density_params(const ModeTable& table, const KernelState& state) {
  DensityParams p;
  for (std::size_t k = 0; k < table.dof_count(); ++k) {
    const Complex phi = field_expectation(table, state, k);
    p.center_re.push_back(phi.real());
    p.center_im.push_back(phi.imag());
    p.variance.push_back(field_variance(table, state, k));
  }
  return p;
}

std::vector<Complex> full_field_expectation(const ModeTable& table, const KernelState& state) {
  std::vector<Complex> per_dof(table.dof_count());
  for (std::size_t k = 0; k < table.dof_count(); ++k) per_dof[k] = field_expectation(table, state, k);
  return expand_to_full(table, per_dof);
}

double energy_free(const ModeTable& table, const KernelInit& init) {
  init.validate(table);
  double total = 0.0;
  for (std::size_t k = 0; k < table.dof_count(); ++k) {
    const InitialKernel& v0 = init.v0[k];
    if (!v0.normalizable()) {
      throw DegenerateKernelError("energy_free: initial kernel of dof " + std::to_string(k) + " is not normalizable");
    }
    const double e = table.dof_mode(k).energy;
    total += table.multiplicity(k) * (e * e + std::norm(v0.v0)) / (4.0 * v0.v0.real());
  }
  return total;
}

double energy_free_at(const ModeTable& table, const KernelState& state) {
  Complex total{};
  double magnitude = 0.0;
  for (std::size_t k = 0; k < table.dof_count(); ++k) {
    const Complex term = free_term(table, state, k);
    total += term;
    magnitude += std::abs(term);
  }
  return checked_real(total, magnitude, "energy_free_at");
}

double energy_noise(const ModeTable& table, const KernelState& state) {
  Complex total{};
  double magnitude = 0.0;
  for (std::size_t k = 0; k < table.dof_count(); ++k) {
    const auto [term, mag] = noise_term(table, state, k);
    total += term;
    magnitude += mag;
  }
  return checked_real(total, magnitude, "energy_noise");
}

double mode_energy(const ModeTable& table, const KernelState& state, std::size_t dof) {
  const Complex free = free_term(table, state, dof);
  const auto [noise, mag] = noise_term(table, state, dof);
  return checked_real(free + noise, std::abs(free) + mag, "mode_energy");
}

ObservableRecord observe(const ModeTable& table, const KernelState& state, const KernelInit& init) {
  ObservableRecord r;
  r.t = state.t;
  r.field_expectation.reserve(table.dof_count());
  r.variance.reserve(table.dof_count());
  for (std::size_t k = 0; k < table.dof_count(); ++k) {
    r.field_expectation.push_back(field_expectation(table, state, k));
    r.variance.push_back(field_variance(table, state, k));
  }
  r.e0 = energy_free(table, init);
  r.e1 = energy_noise(table, state);
  r.e_total = r.e0 + r.e1;
  r.e_density = r.e_total / table.spec().volume();
  return r;
}

MuCorrelators ensemble_mu_correlators(const LatticeSpec& spec, const InitialKernel& init, double energy,
                                      double lambda, double t) {
  if (init.kind != InitialKernel::Kind::finite) {
    throw std::invalid_argument("ensemble_mu_correlators: requires a finite initial kernel");
  }
  if (t < 0.0) throw std::invalid_argument("ensemble_mu_correlators: t must be >= 0");
  MuCorrelators out;
  if (t == 0.0) return out;

  const double prefactor = lambda * lambda * spec.volume() / std::pow(kTwoPi, 2 * spec.dim);
  const Complex f_t = phase_fn(init.v0, energy, t);
  if (!(std::abs(f_t) > 0.0)) throw NumericalError("ensemble_mu_correlators: singular phase at t");

  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  constexpr unsigned kMaxDepth = 20;
  double err = 0.0;
  double l1 = 0.0;
  auto integrate = [&](auto&& fn) {
    const double value = Quad::integrate(fn, 0.0, t, kMaxDepth, 1e-13, &err, &l1);
    if (!(err <= 1e-9 * std::max(1.0, std::abs(value)))) {
      std::ostringstream msg;
      msg << "ensemble_mu_correlators: quadrature did not converge (error estimate " << err << ")";
      throw NumericalError(msg.str());
    }
    return value;
  };
  auto ratio = [&](double tau) { return phase_fn(init.v0, energy, tau) / f_t; };

  const double pm_re = integrate([&](double tau) { return std::real(ratio(tau) * ratio(tau)); });
  const double pm_im = integrate([&](double tau) { return std::imag(ratio(tau) * ratio(tau)); });
  const double abs2 = integrate([&](double tau) { return std::norm(ratio(tau)); });
  out.mu_pm = -prefactor * Complex(pm_re, pm_im);
  out.mu_abs2 = prefactor * abs2;
  return out;
}

}  // namespace stochfield
