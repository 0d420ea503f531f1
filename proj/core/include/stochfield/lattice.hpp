#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace stochfield {

using Complex = std::complex<double>;

inline constexpr int kMaxDim = 3;
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

using IndexVec = std::array<int, kMaxDim>;
using MomentumVec = std::array<double, kMaxDim>;

/// Periodic cubic box of `sites_per_dim`^dim cells.
struct LatticeSpec {
  int dim = 3;
  int sites_per_dim = 8;
  double box_length = 1.0;
  double mass = 1.0;

  /// Throws ConfigError on dim outside {1,2,3}, fewer than two sites, or
  /// non-positive length / negative mass.
  void validate() const;

  double volume() const;            // Ω = L^dim
  double momentum_spacing() const;  // Δp = 2π/L
  double lattice_spacing() const;   // a = L/N_s
  double cell_volume() const;       // a^dim
  double momentum_cell() const;     // Δp^dim
  std::size_t mode_count() const;   // N_s^dim

  /// (2π)^dim Δp^dim = (2π)^(2 dim)/Ω. Every momentum integral of the form
  /// (2π)^dim ∫d^dp (...) becomes this factor times a sum over full modes.
  double kernel_measure() const;
};

enum class ModeClass { independent, self_conjugate, dependent };

const char* to_string(ModeClass c);

struct Mode {
  std::size_t id = 0;
  IndexVec index{};        // components beyond dim are zero
  MomentumVec momentum{};  // Δp · index
  double energy = 0.0;
  ModeClass cls = ModeClass::independent;
  std::size_t partner = 0;  // id of the mode at -index (mod N_s)
};

/// E_p = sqrt(p·p + m²).
double dispersion(std::span<const double> p, double mass);

/// Full list of lattice momenta in lexicographic order of the integer index,
/// each component in (-N_s/2, N_s/2].
///
/// A mode is self-conjugate when index ≡ -index (mod N_s). Otherwise it is
/// independent when its index is lexicographically greater than its
/// partner's, dependent when smaller. For indices without Nyquist components
/// this is "first nonzero component positive".
///
/// The independent and self-conjugate modes together are the degrees of
/// freedom ("dofs") carried by kernel and noise states, kept in mode-id order.
class ModeTable {
 public:
  explicit ModeTable(const LatticeSpec& spec);

  const LatticeSpec& spec() const { return spec_; }
  std::span<const Mode> modes() const { return modes_; }
  const Mode& mode(std::size_t id) const { return modes_.at(id); }
  std::size_t size() const { return modes_.size(); }

  std::span<const std::size_t> dofs() const { return dofs_; }
  std::size_t dof_count() const { return dofs_.size(); }
  const Mode& dof_mode(std::size_t dof) const { return modes_[dofs_[dof]]; }

  /// Dof carrying `mode_id`; dependent modes map to their partner's dof.
  std::size_t dof_of(std::size_t mode_id) const { return dof_of_mode_.at(mode_id); }

  /// Mode id of an integer index (any representative mod N_s).
  std::size_t find(const IndexVec& n) const;

  std::size_t count(ModeClass c) const;
  double max_energy() const { return max_energy_; }

  /// Number of full-lattice modes a dof stands for (2 or 1).
  int multiplicity(std::size_t dof) const {
    return dof_mode(dof).cls == ModeClass::self_conjugate ? 1 : 2;
  }

 private:
  LatticeSpec spec_;
  std::vector<Mode> modes_;
  std::vector<std::size_t> dofs_;
  std::vector<std::size_t> dof_of_mode_;
  double max_energy_ = 0.0;
};

ModeTable build_mode_table(const LatticeSpec& spec);

/// Lifts per-dof values to all modes: a(-p) = conj(a(p)), self-conjugate
/// modes keep only the real part.
std::vector<Complex> expand_to_full(const ModeTable& table, std::span<const Complex> per_dof);

/// φ(x) = Δp^dim Σ_p a(p) e^{ip·x} on the grid x = a·j, j ∈ [0, N_s)^dim
/// (row-major, first axis slowest). Rejects amplitude sets whose conjugation
/// symmetry is violated by more than `tolerance` relative to max |a|.
std::vector<double> to_position_field(const ModeTable& table,
                                      std::span<const Complex> amplitudes,
                                      double tolerance = 1e-10);

/// a(p) = (2π)^-dim a^dim Σ_x φ(x) e^{-ip·x}; inverse of to_position_field.
std::vector<Complex> to_momentum_amplitudes(const ModeTable& table, std::span<const double> field);

namespace detail {

/// Separable DFT between the momentum array (mode-id order) and the position
/// grid: out[x] = Σ_p in[p] e^{sign·i p·x}. No normalization applied.
std::vector<Complex> momentum_to_position(const LatticeSpec& spec, std::span<const Complex> in, int sign);

/// out[p] = Σ_x in[x] e^{sign·i p·x}. No normalization applied.
std::vector<Complex> position_to_momentum(const LatticeSpec& spec, std::span<const Complex> in, int sign);

}  // namespace detail

}  // namespace stochfield
