#include "stochfield/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stochfield/error.hpp"

namespace stochfield {

void LatticeSpec::validate() const {
  std::ostringstream msg;
  if (dim < 1 || dim > kMaxDim) msg << "lattice dim must be 1, 2 or 3 (got " << dim << "); ";
  if (sites_per_dim < 2) msg << "lattice sites must be >= 2 (got " << sites_per_dim << "); ";
  if (!(box_length > 0.0) || !std::isfinite(box_length)) msg << "lattice length must be > 0; ";
  if (!(mass >= 0.0) || !std::isfinite(mass)) msg << "lattice mass must be >= 0; ";
  if (auto s = msg.str(); !s.empty()) throw ConfigError(s.substr(0, s.size() - 2));
}

double LatticeSpec::volume() const { return std::pow(box_length, dim); }
double LatticeSpec::momentum_spacing() const { return kTwoPi / box_length; }
double LatticeSpec::lattice_spacing() const { return box_length / sites_per_dim; }
double LatticeSpec::cell_volume() const { return std::pow(lattice_spacing(), dim); }
double LatticeSpec::momentum_cell() const { return std::pow(momentum_spacing(), dim); }

std::size_t LatticeSpec::mode_count() const {
  std::size_t n = 1;
  for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(sites_per_dim);
  return n;
}

double LatticeSpec::kernel_measure() const { return std::pow(kTwoPi, 2 * dim) / volume(); }

const char* to_string(ModeClass c) {
  switch (c) {
    case ModeClass::independent: return "independent";
    case ModeClass::self_conjugate: return "self_conjugate";
    case ModeClass::dependent: return "dependent";
  }
  return "?";
}

double dispersion(std::span<const double> p, double mass) {
  double p2 = 0.0;
  for (double c : p) p2 += c * c;
  return std::sqrt(p2 + mass * mass);
}

namespace {

int min_index(int sites) { return -((sites - 1) / 2); }

int wrap(int n, int sites) {
  const int lo = min_index(sites);
  int k = (n - lo) % sites;
  if (k < 0) k += sites;
  return lo + k;
}

}  // namespace

ModeTable::ModeTable(const LatticeSpec& spec) : spec_(spec) {
  spec_.validate();
  const int d = spec_.dim;
  const int ns = spec_.sites_per_dim;
  const int lo = min_index(ns);
  const double dp = spec_.momentum_spacing();
  const std::size_t total = spec_.mode_count();

  modes_.resize(total);
  for (std::size_t id = 0; id < total; ++id) {
    Mode& m = modes_[id];
    m.id = id;
    std::size_t rest = id;
    for (int ax = d - 1; ax >= 0; --ax) {
      m.index[ax] = lo + static_cast<int>(rest % ns);
      rest /= ns;
    }
    for (int ax = 0; ax < d; ++ax) m.momentum[ax] = dp * m.index[ax];
    m.energy = dispersion(std::span<const double>(m.momentum.data(), d), spec_.mass);
    max_energy_ = std::max(max_energy_, m.energy);
  }

  for (Mode& m : modes_) {
    IndexVec neg{};
    for (int ax = 0; ax < d; ++ax) neg[ax] = wrap(-m.index[ax], ns);
    m.partner = find(neg);
    if (neg == m.index) {
      m.cls = ModeClass::self_conjugate;
    } else {
      m.cls = std::lexicographical_compare(neg.begin(), neg.begin() + d, m.index.begin(),
                                           m.index.begin() + d)
                  ? ModeClass::independent
                  : ModeClass::dependent;
    }
  }

  dof_of_mode_.assign(total, 0);
  for (const Mode& m : modes_) {
    if (m.cls != ModeClass::dependent) {
      dof_of_mode_[m.id] = dofs_.size();
      dofs_.push_back(m.id);
    }
  }
  for (const Mode& m : modes_) {
    if (m.cls == ModeClass::dependent) dof_of_mode_[m.id] = dof_of_mode_[m.partner];
  }
}

std::size_t ModeTable::find(const IndexVec& n) const {
  const int ns = spec_.sites_per_dim;
  const int lo = min_index(ns);
  std::size_t id = 0;
  for (int ax = 0; ax < spec_.dim; ++ax) id = id * ns + static_cast<std::size_t>(wrap(n[ax], ns) - lo);
  return id;
}

std::size_t ModeTable::count(ModeClass c) const {
  return static_cast<std::size_t>(
      std::count_if(modes_.begin(), modes_.end(), [c](const Mode& m) { return m.cls == c; }));
}

ModeTable build_mode_table(const LatticeSpec& spec) { return ModeTable(spec); }

std::vector<Complex> expand_to_full(const ModeTable& table, std::span<const Complex> per_dof) {
  if (per_dof.size() != table.dof_count()) throw std::invalid_argument("expand_to_full: dof count mismatch");
  std::vector<Complex> full(table.size());
  for (std::size_t k = 0; k < table.dof_count(); ++k) {
    const Mode& m = table.dof_mode(k);
    if (m.cls == ModeClass::self_conjugate) {
      full[m.id] = per_dof[k].real();
    } else {
      full[m.id] = per_dof[k];
      full[m.partner] = std::conj(per_dof[k]);
    }
  }
  return full;
}

namespace detail {

namespace {

// Applies out[j] = Σ_k in[k] w(k, j) along every axis, where the k side is
// the momentum axis when `from_momentum` is set.
std::vector<Complex> separable_dft(const LatticeSpec& spec, std::span<const Complex> in, int sign,
                                   bool from_momentum) {
  const int d = spec.dim;
  const int ns = spec.sites_per_dim;
  const int lo = min_index(ns);
  const std::size_t total = spec.mode_count();
  if (in.size() != total) throw std::invalid_argument("dft: array size does not match lattice");

  // twiddle[k * ns + j] = exp(sign i 2π n_k j / N_s); from_momentum uses (k=momentum, j=position).
  std::vector<Complex> twiddle(static_cast<std::size_t>(ns) * ns);
  for (int k = 0; k < ns; ++k) {
    for (int j = 0; j < ns; ++j) {
      const int nk = lo + (from_momentum ? k : j);
      const int xj = from_momentum ? j : k;
      long long phase = (static_cast<long long>(nk) * xj) % ns;
      if (phase < 0) phase += ns;
      const double ang = sign * kTwoPi * static_cast<double>(phase) / ns;
      twiddle[static_cast<std::size_t>(k) * ns + j] = {std::cos(ang), std::sin(ang)};
    }
  }

  std::vector<Complex> data(in.begin(), in.end());
  std::vector<Complex> line(ns);
  std::size_t stride = total;
  for (int ax = 0; ax < d; ++ax) {
    stride /= ns;
    const std::size_t block = stride * ns;
    for (std::size_t base = 0; base < total; base += block) {
      for (std::size_t off = 0; off < stride; ++off) {
        const std::size_t start = base + off;
        for (int j = 0; j < ns; ++j) {
          Complex acc = 0.0;
          for (int k = 0; k < ns; ++k) acc += data[start + k * stride] * twiddle[static_cast<std::size_t>(k) * ns + j];
          line[j] = acc;
        }
        for (int j = 0; j < ns; ++j) data[start + j * stride] = line[j];
      }
    }
  }
  return data;
}

}  // namespace

std::vector<Complex> momentum_to_position(const LatticeSpec& spec, std::span<const Complex> in, int sign) {
  return separable_dft(spec, in, sign, true);
}

std::vector<Complex> position_to_momentum(const LatticeSpec& spec, std::span<const Complex> in, int sign) {
  return separable_dft(spec, in, sign, false);
}

}  // namespace detail

std::vector<double> to_position_field(const ModeTable& table, std::span<const Complex> amplitudes,
                                      double tolerance) {
  if (amplitudes.size() != table.size()) throw std::invalid_argument("to_position_field: size mismatch");
  double scale = 0.0;
  for (const Complex& a : amplitudes) scale = std::max(scale, std::abs(a));
  for (const Mode& m : table.modes()) {
    const double err = std::abs(amplitudes[m.partner] - std::conj(amplitudes[m.id]));
    if (err > tolerance * scale) {
      throw std::invalid_argument("to_position_field: amplitudes violate a(-p) = conj(a(p)) at mode " +
                                  std::to_string(m.id));
    }
  }
  const auto raw = detail::momentum_to_position(table.spec(), amplitudes, +1);
  const double norm = table.spec().momentum_cell();
  std::vector<double> field(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) field[i] = norm * raw[i].real();
  return field;
}

std::vector<Complex> to_momentum_amplitudes(const ModeTable& table, std::span<const double> field) {
  if (field.size() != table.size()) throw std::invalid_argument("to_momentum_amplitudes: size mismatch");
  std::vector<Complex> in(field.begin(), field.end());
  auto out = detail::position_to_momentum(table.spec(), in, -1);
  const LatticeSpec& s = table.spec();
  const double norm = s.cell_volume() / std::pow(kTwoPi, s.dim);
  for (Complex& c : out) c *= norm;
  return out;
}

}  // namespace stochfield
