#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "stochfield/lattice.hpp"

namespace stochfield {

/// Identifies one trajectory's random stream.
///
/// Increments are addressed positionally: the Philox key is the 64-bit master
/// seed, the counter is (dof, slice_index, trajectory_id low, trajectory_id
/// high). One generator call per dof yields two uniforms, turned into a
/// standard normal pair by Box-Muller. Any slice of any trajectory can be
/// regenerated without replaying its predecessors.
struct StreamSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t trajectory_id = 0;
};

/// Momentum-space noise increments dW(t,p) for one time step, one entry per
/// dof. Dependent modes are implied by dW(-p) = conj(dW(p)); self-conjugate
/// entries are real.
struct NoiseSlice {
  double dt = 0.0;
  std::vector<Complex> increments;
};

/// D = Ω dt / (2 (2π)^(2 dim)): variance of each real/imaginary component of
/// an independent mode. Self-conjugate increments have variance 2D.
double noise_component_variance(const LatticeSpec& spec, double dt);

/// Standard normal pair for (stream, slice, dof).
std::array<double, 2> standard_normal_pair(const StreamSpec& stream, std::uint64_t slice_index, std::uint32_t dof);

NoiseSlice sample_slice(const ModeTable& table, double dt, const StreamSpec& stream, std::uint64_t slice_index);

/// Allocation-free variant; `out.increments` is resized as needed.
void sample_slice_into(const ModeTable& table, double dt, const StreamSpec& stream, std::uint64_t slice_index,
                       NoiseSlice& out);

/// Per-cell increments dW(t,x) = a^dim Δp^dim Σ_p e^{-ip·x} dW(t,p). Each cell
/// has variance dt·a^dim.
std::vector<double> to_position_noise(const NoiseSlice& slice, const ModeTable& table);

/// Source of noise slices addressed by step index.
class NoiseSource {
 public:
  virtual ~NoiseSource() = default;
  virtual void fill(std::uint64_t slice_index, NoiseSlice& out) const = 0;
};

class StreamNoise final : public NoiseSource {
 public:
  StreamNoise(const ModeTable& table, double dt, StreamSpec stream) : table_(&table), dt_(dt), stream_(stream) {}
  void fill(std::uint64_t slice_index, NoiseSlice& out) const override {
    sample_slice_into(*table_, dt_, stream_, slice_index, out);
  }

 private:
  const ModeTable* table_;
  double dt_;
  StreamSpec stream_;
};

/// Replays previously recorded slices; asking past the end is an error.
class RecordedNoise final : public NoiseSource {
 public:
  explicit RecordedNoise(std::vector<NoiseSlice> slices) : slices_(std::move(slices)) {}
  void fill(std::uint64_t slice_index, NoiseSlice& out) const override;
  std::span<const NoiseSlice> slices() const { return slices_; }

 private:
  std::vector<NoiseSlice> slices_;
};

}  // namespace stochfield
