#include <doctest.h>

#include <cmath>

#include "stochfield/error.hpp"
#include "stochfield/observables.hpp"
#include "stochfield/verify/oracles.hpp"

using namespace stochfield;

namespace {

const Complex I{0.0, 1.0};

LatticeSpec spec_of(int dim, int sites, double length, double mass = 1.0) {
  LatticeSpec s;
  s.dim = dim;
  s.sites_per_dim = sites;
  s.box_length = length;
  s.mass = mass;
  return s;
}

}  // namespace

TEST_SUITE("observables") {
  TEST_CASE("field expectation examples") {
    const ModeTable t(spec_of(1, 4, 4.0));
    KernelState s = initial_state(t, KernelInit::vacuum(t));
    CHECK(field_expectation(t, s, 1) == Complex{});
    s.dofs[1].v = 2.0;
    s.dofs[1].mu_plus = 1.0;
    s.dofs[1].mu_minus = 1.0;
    CHECK(field_expectation(t, s, 1) == Complex{0.5, 0.0});
    s.dofs[0].v = Complex{2.0, 0.7};
    s.dofs[0].mu_plus = s.dofs[0].mu_minus = Complex{0.6, 0.9};
    CHECK(field_expectation(t, s, 0) == Complex{0.3, 0.0});
  }

  TEST_CASE("degenerate kernels are reported") {
    const ModeTable t(spec_of(1, 4, 4.0));
    KernelState s = initial_state(t, KernelInit::vacuum(t));
    s.dofs[1].v = Complex{0.0, 1.0};
    CHECK_THROWS_AS(field_expectation(t, s, 1), DegenerateKernelError);
  }

  TEST_CASE("vacuum variance") {
    const LatticeSpec spec = spec_of(2, 4, 3.0);
    const ModeTable t(spec);
    const KernelState s = initial_state(t, KernelInit::vacuum(t));
    for (std::size_t d = 0; d < t.dof_count(); ++d) {
      const double base = spec.volume() / (4.0 * std::pow(kTwoPi, 4) * t.dof_mode(d).energy);
      const double expect = t.dof_mode(d).cls == ModeClass::self_conjugate ? 2.0 * base : base;
      CHECK(field_variance(t, s, d) == doctest::Approx(expect).epsilon(1e-14));
    }
  }

  TEST_CASE("one noisy step from vacuum: field expectation by hand") {
    const ModeTable t(spec_of(1, 8, 8.0));
    const KernelInit init = KernelInit::vacuum(t);
    const double dt = 0.05, lambda = 0.3;
    const NoiseSlice slice = sample_slice(t, dt, StreamSpec{9, 1}, 0);
    const KernelState s = evolve(t, initial_state(t, init), slice, init, Scheme::exact, lambda);
    for (std::size_t d = 0; d < t.dof_count(); ++d) {
      const double e = t.dof_mode(d).energy;
      const Complex prop = std::exp(-I * e * dt);
      const Complex w = slice.increments[d];
      const Complex hand = (std::conj(I * lambda * prop * w) + I * lambda * prop * std::conj(w)) / (2.0 * e);
      CHECK(std::abs(field_expectation(t, s, d) - hand) < 1e-15);
    }
  }

  TEST_CASE("zero-point energy") {
    for (int dim = 1; dim <= 3; ++dim) {
      const ModeTable t(spec_of(dim, 5, 4.0, 0.8));
      double sum = 0.0;
      for (const Mode& m : t.modes()) sum += 0.5 * m.energy;
      CHECK(energy_free(t, KernelInit::vacuum(t)) == doctest::Approx(sum).epsilon(1e-13));
    }
    // Two-mode toy: zero mode E = 1 and Nyquist mode p = 1, E = sqrt(2).
    const ModeTable toy(spec_of(1, 2, kTwoPi, 1.0));
    CHECK(energy_free(toy, KernelInit::vacuum(toy)) == doctest::Approx(1.2071067811865475).epsilon(1e-15));
  }

  TEST_CASE("squeezed vacuum costs energy") {
    const ModeTable t(spec_of(1, 8, 8.0));
    double sum_e = 0.0;
    for (const Mode& m : t.modes()) sum_e += m.energy;
    for (double c : {0.3, 1.0, 2.5}) {
      const double e = energy_free(t, KernelInit::scaled(t, c));
      CHECK(e == doctest::Approx(sum_e * (1 + c * c) / (4 * c)).epsilon(1e-13));
      CHECK(e >= 0.5 * sum_e * (1 - 1e-15));
    }
  }

  TEST_CASE("noise energy vanishes without mu") {
    const ModeTable t(spec_of(1, 8, 8.0));
    CHECK(energy_noise(t, initial_state(t, KernelInit::scaled(t, Complex{0.7, 0.3}))) == 0.0);
  }

  TEST_CASE("one step from vacuum: E1 = c lambda^2 (sum_pairs |w|^2 + sum_sc w^2 / 2)") {
    // Hand expansion: with prop = e^{-iE dt} the dt dependence cancels exactly.
    const LatticeSpec spec = spec_of(1, 8, 8.0);
    const ModeTable t(spec);
    const KernelInit init = KernelInit::vacuum(t);
    const double dt = 0.07, lambda = 0.4;
    const NoiseSlice slice = sample_slice(t, dt, StreamSpec{2, 2}, 0);
    const KernelState s = evolve(t, initial_state(t, init), slice, init, Scheme::exact, lambda);
    double hand = 0.0;
    for (std::size_t d = 0; d < t.dof_count(); ++d) {
      const double w2 = std::norm(slice.increments[d]);
      hand += t.dof_mode(d).cls == ModeClass::self_conjugate ? 0.5 * w2 : w2;
    }
    hand *= spec.kernel_measure() * lambda * lambda;
    CHECK(energy_noise(t, s) == doctest::Approx(hand).epsilon(1e-12));
  }

  TEST_CASE("mode energies add up and free energy stays put") {
    const ModeTable t(spec_of(2, 4, 3.0));
    const KernelInit init = KernelInit::scaled(t, Complex{0.8, -0.2});
    DynamicsConfig dyn;
    dyn.dt = 0.02;
    dyn.t_max = 2.0;
    dyn.lambda = 0.6;
    dyn.snapshot_stride = 10;
    const double e0 = energy_free(t, init);
    for (const KernelState& s : run_trajectory(t, init, dyn, StreamNoise(t, dyn.dt, StreamSpec{1, 3}))) {
      const ObservableRecord r = observe(t, s, init);
      double modes = 0.0;
      for (std::size_t d = 0; d < t.dof_count(); ++d) modes += mode_energy(t, s, d);
      CHECK(modes == doctest::Approx(r.e_total).epsilon(1e-12));
      CHECK(r.e_total == doctest::Approx(r.e0 + r.e1).epsilon(1e-15));
      CHECK(energy_free_at(t, s) == doctest::Approx(e0).epsilon(1e-10));
      CHECK(r.e_density == doctest::Approx(r.e_total / t.spec().volume()).epsilon(1e-15));
    }
  }

  TEST_CASE("reconstructed field is Hermitian and real in position space") {
    const ModeTable t(spec_of(2, 4, 3.0));
    const KernelInit init = KernelInit::scaled(t, Complex{1.2, 0.4});
    DynamicsConfig dyn;
    dyn.dt = 0.05;
    dyn.t_max = 1.0;
    dyn.lambda = 0.5;
    const KernelState s = run_trajectory(t, init, dyn, StreamNoise(t, dyn.dt, StreamSpec{4, 4})).back();
    const auto full = full_field_expectation(t, s);
    for (const Mode& m : t.modes()) CHECK(std::abs(full[m.partner] - std::conj(full[m.id])) < 1e-15);
    CHECK_NOTHROW(to_position_field(t, full, 1e-10));
  }

  TEST_CASE("vacuum observables are constant without noise") {
    const ModeTable t(spec_of(1, 8, 8.0));
    const KernelInit init = KernelInit::vacuum(t);
    DynamicsConfig dyn;
    dyn.dt = 0.01;
    dyn.t_max = 3.0;
    dyn.lambda = 0.0;
    const auto snaps = run_trajectory(t, init, dyn, StreamNoise(t, dyn.dt, {}));
    const ObservableRecord first = observe(t, snaps.front(), init);
    for (const auto& s : snaps) {
      const ObservableRecord r = observe(t, s, init);
      CHECK(r.e_total == doctest::Approx(first.e_total).epsilon(1e-10));
      for (std::size_t d = 0; d < t.dof_count(); ++d) CHECK(r.variance[d] == doctest::Approx(first.variance[d]).epsilon(1e-10));
    }
  }

  TEST_CASE("mu correlator predictions") {
    const LatticeSpec spec = spec_of(1, 8, 8.0);
    const MuCorrelators z = ensemble_mu_correlators(spec, InitialKernel::finite_value(1.0), 1.0, 0.3, 0.0);
    CHECK(z.mu_abs2 == 0.0);
    CHECK(z.mu_pm == Complex{});
    const double pref = 0.09 * spec.volume() / std::pow(kTwoPi, 2);
    for (double t : {0.3, 2.0, 9.0}) {
      const MuCorrelators v = ensemble_mu_correlators(spec, InitialKernel::finite_value(1.4), 1.4, 0.3, t);
      CHECK(v.mu_abs2 == doctest::Approx(pref * t).epsilon(1e-12));
      // Squeezed start against an independent quadrature of the same integrals.
      const Complex v0{0.9, 0.5};
      const double e = 1.4;
      auto f = [&](double s) { return std::cos(s * e) + I * (v0 / e) * std::sin(s * e); };
      const Complex ft = f(t);
      const Complex abs2 = verify::adaptive_simpson([&](double s) { return Complex{std::norm(f(s) / ft), 0.0}; }, 0.0, t, 1e-13);
      const Complex pm = verify::adaptive_simpson([&](double s) { return (f(s) / ft) * (f(s) / ft); }, 0.0, t, 1e-13);
      const MuCorrelators sq = ensemble_mu_correlators(spec, InitialKernel::finite_value(v0), e, 0.3, t);
      CHECK(sq.mu_abs2 == doctest::Approx(pref * abs2.real()).epsilon(1e-9));
      CHECK(std::abs(sq.mu_pm + pref * pm) < 1e-9 * std::abs(pref * pm));
    }
  }
}
