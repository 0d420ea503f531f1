#include "stochfield/classical.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "stochfield/error.hpp"
#include "stochfield/observables.hpp"

namespace stochfield {

namespace {

void check_inputs(const ModeTable& table, const ClassicalState& state, const NoiseSlice& slice) {
  if (state.dofs.size() != table.dof_count() || slice.increments.size() != table.dof_count()) {
    throw std::invalid_argument("classical step: state/slice sizes do not match the mode table");
  }
}

void check_finite(const ClassicalState& s) {
  for (const auto& d : s.dofs) {
    if (!std::isfinite(std::abs(d.phi)) || !std::isfinite(std::abs(d.pi))) {
      throw NumericalError("non-finite classical field at step " + std::to_string(s.step));
    }
  }
}

ClassicalState advance(const ClassicalState& state, double dt) {
  ClassicalState next = state;
  next.step = state.step + 1;
  next.t = static_cast<double>(next.step) * dt;
  return next;
}

}  // namespace

ClassicalState classical_rest_state(const ModeTable& table) {
  ClassicalState s;
  s.dofs.resize(table.dof_count());
  return s;
}

ClassicalState classical_step_exact(const ModeTable& table, const ClassicalState& state, const NoiseSlice& slice,
                                    double lambda) {
  check_inputs(table, state, slice);
  const double dt = slice.dt;
  ClassicalState next = advance(state, dt);
  for (std::size_t k = 0; k < table.dof_count(); ++k) {
    const double e = table.dof_mode(k).energy;
    const double x = e * dt;
    const double c = std::cos(x);
    const double s_over_e = std::abs(x) < 1e-4 ? dt * (1.0 - x * x / 6.0 * (1.0 - x * x / 20.0)) : std::sin(x) / e;
    const Complex phi = state.dofs[k].phi;
    const Complex pi = state.dofs[k].pi + lambda * std::conj(slice.increments[k]);
    next.dofs[k].phi = phi * c + pi * s_over_e;
    next.dofs[k].pi = -e * e * s_over_e * phi + pi * c;
  }
  check_finite(next);
  return next;
}

ClassicalState classical_step_em(const ModeTable& table, const ClassicalState& state, const NoiseSlice& slice,
                                 double lambda) {
  check_inputs(table, state, slice);
  const double dt = slice.dt;
  ClassicalState next = advance(state, dt);
  for (std::size_t k = 0; k < table.dof_count(); ++k) {
    const double e = table.dof_mode(k).energy;
    const ClassicalDof& d = state.dofs[k];
    next.dofs[k].phi = d.phi + d.pi * dt;
    next.dofs[k].pi = d.pi - e * e * d.phi * dt + lambda * std::conj(slice.increments[k]);
  }
  check_finite(next);
  return next;
}

double classical_energy(const ModeTable& table, const ClassicalState& state) {
  double total = 0.0;
  for (std::size_t k = 0; k < table.dof_count(); ++k) {
    const double e = table.dof_mode(k).energy;
    total += table.multiplicity(k) * (std::norm(state.dofs[k].pi) + e * e * std::norm(state.dofs[k].phi));
  }
  return 0.5 * table.spec().kernel_measure() * total;
}

void run_classical(const ModeTable& table, const DynamicsConfig& dynamics, Scheme scheme, const NoiseSource& noise,
                   const std::function<void(const ClassicalState&)>& observe) {
  dynamics.validate();
  ClassicalState state = classical_rest_state(table);
  observe(state);
  NoiseSlice slice;
  const std::uint64_t steps = dynamics.step_count();
  for (std::uint64_t s = 0; s < steps; ++s) {
    noise.fill(s, slice);
    state = scheme == Scheme::exact ? classical_step_exact(table, state, slice, dynamics.lambda)
                                    : classical_step_em(table, state, slice, dynamics.lambda);
    if (dynamics.is_snapshot(state.step)) observe(state);
  }
}

EhrenfestReport ehrenfest_compare(const ModeTable& table, const KernelInit& init, const EhrenfestConfig& config,
                                  const NoiseSource& noise) {
  const DynamicsConfig& dyn = config.dynamics;
  if (config.classical_dt != 0.0 && config.classical_dt != dyn.dt) {
    throw std::invalid_argument("ehrenfest_compare: quantum and classical time grids differ");
  }
  if (!init.mu0_is_zero()) {
    throw std::invalid_argument("ehrenfest_compare: matched initial data needs mu0 = 0 (classical field at rest)");
  }
  if (!init.normalizable()) throw std::invalid_argument("ehrenfest_compare: initial kernel must be normalizable");

  const KernelEngine engine(table, init, dyn);
  KernelState q = engine.initial();
  ClassicalState c = classical_rest_state(table);
  EhrenfestReport report;
  NoiseSlice slice;
  for (std::uint64_t s = 0; s < engine.step_count(); ++s) {
    noise.fill(s, slice);
    engine.step(q, slice);
    c = config.classical_scheme == Scheme::exact ? classical_step_exact(table, c, slice, dyn.lambda)
                                                 : classical_step_em(table, c, slice, dyn.lambda);
    for (std::size_t k = 0; k < table.dof_count(); ++k) {
      const Complex phi_q = field_expectation(table, q, k);
      const double diff = std::abs(phi_q - c.dofs[k].phi);
      report.scale = std::max(report.scale, std::abs(c.dofs[k].phi));
      if (diff > report.max_discrepancy) {
        report.max_discrepancy = diff;
        report.t_at_max = q.t;
        report.mode_at_max = table.dofs()[k];
      }
    }
  }
  report.steps = engine.step_count();
  report.relative = report.scale > 0.0 ? report.max_discrepancy / report.scale : report.max_discrepancy;
  return report;
}

}  // namespace stochfield
