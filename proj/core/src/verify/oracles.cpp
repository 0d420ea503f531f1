#include "stochfield/verify/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stochfield::verify {

namespace {

Complex rhs(Complex v, double e) {
  const Complex i{0.0, 1.0};
  return -i * v * v + i * e * e;
}

Complex rk4_advance(Complex v, double e, double h, std::size_t steps) {
  for (std::size_t k = 0; k < steps; ++k) {
    const Complex k1 = rhs(v, e);
    const Complex k2 = rhs(v + 0.5 * h * k1, e);
    const Complex k3 = rhs(v + 0.5 * h * k2, e);
    const Complex k4 = rhs(v + h * k3, e);
    v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return v;
}

Complex simpson_rec(const std::function<Complex(double)>& f, double a, double b, Complex fa, Complex fm, Complex fb,
                    Complex whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const Complex flm = f(lm), frm = f(rm);
  const Complex left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const Complex right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const Complex delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

Complex rk4_riccati(Complex v0, double energy, double t, std::size_t steps) {
  if (steps == 0) throw std::invalid_argument("rk4_riccati: steps must be > 0");
  return rk4_advance(v0, energy, t / static_cast<double>(steps), steps);
}

std::vector<Complex> rk4_riccati_path(Complex v0, double energy, double t, std::size_t steps_per_sample,
                                      std::size_t samples) {
  std::vector<Complex> out{v0};
  const double h = t / static_cast<double>(samples * steps_per_sample);
  Complex v = v0;
  for (std::size_t s = 0; s < samples; ++s) {
    v = rk4_advance(v, energy, h, steps_per_sample);
    out.push_back(v);
  }
  return out;
}

Complex adaptive_simpson(const std::function<Complex(double)>& f, double a, double b, double tol, int max_depth) {
  const Complex fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const Complex whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

double chi2_variance_z(double sample_variance, std::uint64_t n, double true_variance) {
  const double k = static_cast<double>(n - 1);
  return (k * sample_variance / true_variance - k) / std::sqrt(2.0 * k);
}

double mean_z(double mean, double stderr_mean, double expected) {
  const double d = mean - expected;
  if (stderr_mean > 0.0) return d / stderr_mean;
  return d == 0.0 ? 0.0 : INFINITY;
}

double anderson_darling_normal(std::vector<double> z) {
  if (z.size() < 8) throw std::invalid_argument("anderson_darling_normal: too few samples");
  std::sort(z.begin(), z.end());
  const double n = static_cast<double>(z.size());
  auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); };
  auto sf = [](double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); };
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double lo = std::max(cdf(z[i]), 1e-300);
    const double hi = std::max(sf(z[z.size() - 1 - i]), 1e-300);
    s += (2.0 * static_cast<double>(i) + 1.0) * (std::log(lo) + std::log(hi));
  }
  return -n - s / n;
}

double anderson_darling_pvalue(double a2) {
  if (a2 <= 0.0) return 1.0;
  double cdf;
  if (a2 < 2.0) {
    cdf = std::exp(-1.2337141 / a2) / std::sqrt(a2) *
          (2.00012 + (.247105 - (.0649821 - (.0347962 - (.011672 - .00168691 * a2) * a2) * a2) * a2) * a2);
  } else {
    cdf = std::exp(-std::exp(1.0776 - (2.30695 - (.43424 - (.082433 - (.008056 - .0003146 * a2) * a2) * a2) * a2) * a2));
  }
  return 1.0 - cdf;
}

namespace {

// Site a has integer coordinates in [0, N_s) (row-major); mode b carries the
// table's integer index. phase(a, b) = 2π k_b·x_a / N_s.
double site_mode_phase(const ModeTable& table, std::size_t a, std::size_t b) {
  const LatticeSpec& spec = table.spec();
  const int ns = spec.sites_per_dim;
  std::array<int, kMaxDim> xa{};
  std::size_t rem = a;
  for (int d = spec.dim - 1; d >= 0; --d) {
    xa[d] = static_cast<int>(rem % ns);
    rem /= ns;
  }
  const IndexVec& k = table.mode(b).index;
  double phase = 0.0;
  for (int d = 0; d < spec.dim; ++d) phase += 2.0 * std::numbers::pi * k[d] * xa[d] / ns;
  return phase;
}

}  // namespace

std::vector<Complex> direct_momentum_to_position(const ModeTable& table, std::span<const Complex> full) {
  const std::size_t n = table.size();
  if (full.size() != n) throw std::invalid_argument("direct transform: size mismatch");
  std::vector<Complex> out(n);
  for (std::size_t a = 0; a < n; ++a) {
    Complex acc = 0.0;
    for (std::size_t b = 0; b < n; ++b) acc += full[b] * std::polar(1.0, site_mode_phase(table, a, b));
    out[a] = table.spec().momentum_cell() * acc;
  }
  return out;
}

std::vector<Complex> direct_position_to_momentum(const ModeTable& table, std::span<const Complex> field) {
  const std::size_t n = table.size();
  if (field.size() != n) throw std::invalid_argument("direct transform: size mismatch");
  const LatticeSpec& spec = table.spec();
  const double scale = spec.cell_volume() / std::pow(kTwoPi, spec.dim);
  std::vector<Complex> out(n);
  for (std::size_t b = 0; b < n; ++b) {
    Complex acc = 0.0;
    for (std::size_t a = 0; a < n; ++a) acc += field[a] * std::polar(1.0, -site_mode_phase(table, a, b));
    out[b] = scale * acc;
  }
  return out;
}

}  // namespace stochfield::verify
