#include "stochfield/noise.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "stochfield/philox.hpp"

namespace stochfield {

double noise_component_variance(const LatticeSpec& spec, double dt) {
  return spec.volume() * dt / (2.0 * std::pow(kTwoPi, 2 * spec.dim));
}

std::array<double, 2> standard_normal_pair(const StreamSpec& stream, std::uint64_t slice_index, std::uint32_t dof) {
  if (slice_index > 0xFFFFFFFFull) throw std::out_of_range("noise stream: slice index exceeds 2^32");
  const Philox4x32::Key key{static_cast<std::uint32_t>(stream.master_seed),
                            static_cast<std::uint32_t>(stream.master_seed >> 32)};
  const Philox4x32::Counter ctr{dof, static_cast<std::uint32_t>(slice_index),
                                static_cast<std::uint32_t>(stream.trajectory_id),
                                static_cast<std::uint32_t>(stream.trajectory_id >> 32)};
  const auto w = Philox4x32::generate(ctr, key);
  const double u1 = uniform_open_closed(w[0], w[1]);
  const double u2 = uniform_open_closed(w[2], w[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = kTwoPi * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

void sample_slice_into(const ModeTable& table, double dt, const StreamSpec& stream, std::uint64_t slice_index,
                       NoiseSlice& out) {
  if (dt < 0.0) throw std::invalid_argument("sample_slice: dt must be >= 0");
  const double sigma = std::sqrt(noise_component_variance(table.spec(), dt));
  const double sigma_sc = std::sqrt(2.0) * sigma;
  out.dt = dt;
  out.increments.resize(table.dof_count());
  for (std::size_t k = 0; k < table.dof_count(); ++k) {
    const auto z = standard_normal_pair(stream, slice_index, static_cast<std::uint32_t>(k));
    if (table.dof_mode(k).cls == ModeClass::self_conjugate) {
      out.increments[k] = {sigma_sc * z[0], 0.0};
    } else {
      out.increments[k] = {sigma * z[0], sigma * z[1]};
    }
  }
}

NoiseSlice sample_slice(const ModeTable& table, double dt, const StreamSpec& stream, std::uint64_t slice_index) {
  NoiseSlice s;
  sample_slice_into(table, dt, stream, slice_index, s);
  return s;
}

std::vector<double> to_position_noise(const NoiseSlice& slice, const ModeTable& table) {
  const auto full = expand_to_full(table, slice.increments);
  const auto raw = detail::momentum_to_position(table.spec(), full, -1);
  const LatticeSpec& s = table.spec();
  const double norm = s.cell_volume() * s.momentum_cell();
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = norm * raw[i].real();
  return out;
}

void RecordedNoise::fill(std::uint64_t slice_index, NoiseSlice& out) const {
  if (slice_index >= slices_.size()) {
    throw std::out_of_range("recorded noise exhausted at slice " + std::to_string(slice_index));
  }
  out = slices_[slice_index];
}

}  // namespace stochfield
