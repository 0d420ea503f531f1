#include "stochfield/lindblad.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "stochfield/error.hpp"

namespace stochfield {

SingleModeGenerator SingleModeGenerator::make(double energy, double lambda, int n_max) {
  if (!(energy > 0.0)) throw ConfigError("lindblad: mode energy must be > 0");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be ≥ 0");
  if (n_max < 2) throw ConfigError("lindblad: n_max must be >= 2");
  SingleModeGenerator g;
  g.energy = energy;
  g.lambda = lambda;
  g.n_max = n_max;
  g.x_offdiag.resize(static_cast<std::size_t>(n_max));
  for (int n = 0; n < n_max; ++n) g.x_offdiag[n] = std::sqrt((n + 1.0) / (2.0 * energy));
  return g;
}

Eigen::MatrixXcd SingleModeGenerator::hamiltonian() const {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dimension(), dimension());
  for (int n = 0; n < dimension(); ++n) h(n, n) = energy * (n + 0.5);
  return h;
}

Eigen::MatrixXcd SingleModeGenerator::position() const {
  Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(dimension(), dimension());
  for (int n = 0; n < n_max; ++n) {
    x(n, n + 1) = x_offdiag[n];
    x(n + 1, n) = x_offdiag[n];
  }
  return x;
}

DensityMatrix DensityMatrix::vacuum(double energy, int n_max) {
  DensityMatrix d;
  d.energy = energy;
  d.n_max = n_max;
  d.rho = Eigen::MatrixXcd::Zero(n_max + 1, n_max + 1);
  d.rho(0, 0) = 1.0;
  return d;
}

DensityMatrix DensityMatrix::coherent(double energy, int n_max, std::complex<double> alpha) {
  Eigen::VectorXcd psi(n_max + 1);
  std::complex<double> amp = std::exp(-0.5 * std::norm(alpha));
  for (int n = 0; n <= n_max; ++n) {
    psi(n) = amp;
    amp *= alpha / std::sqrt(n + 1.0);
  }
  psi.normalize();
  DensityMatrix d;
  d.energy = energy;
  d.n_max = n_max;
  d.rho = psi * psi.adjoint();
  return d;
}

DensityMatrix DensityMatrix::embedded(int new_n_max) const {
  if (new_n_max < n_max) throw std::invalid_argument("DensityMatrix::embedded: cannot shrink");
  DensityMatrix d;
  d.energy = energy;
  d.n_max = new_n_max;
  d.rho = Eigen::MatrixXcd::Zero(new_n_max + 1, new_n_max + 1);
  d.rho.topLeftCorner(n_max + 1, n_max + 1) = rho;
  return d;
}

namespace {

// out = x·a (left) for tridiagonal symmetric x with zero diagonal.
void tri_left(const std::vector<double>& s, const Eigen::MatrixXcd& a, Eigen::MatrixXcd& out) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) {
      std::complex<double> acc = 0.0;
      if (r > 0) acc += s[r - 1] * a(r - 1, c);
      if (r + 1 < n) acc += s[r] * a(r + 1, c);
      out(r, c) = acc;
    }
  }
}

// out = a·x (right).
void tri_right(const std::vector<double>& s, const Eigen::MatrixXcd& a, Eigen::MatrixXcd& out) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) {
      std::complex<double> acc = 0.0;
      if (c > 0) acc += a(r, c - 1) * s[c - 1];
      if (c + 1 < n) acc += a(r, c + 1) * s[c];
      out(r, c) = acc;
    }
  }
}

}  // namespace

Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& rho, const SingleModeGenerator& gen) {
  const Eigen::Index n = gen.dimension();
  if (rho.rows() != n || rho.cols() != n) throw std::invalid_argument("lindblad_rhs: dimension mismatch");
  const auto& s = gen.x_offdiag;
  Eigen::MatrixXcd xr(n, n), rx(n, n), xrx(n, n), xxr(n, n), rxx(n, n);
  tri_left(s, rho, xr);
  tri_right(s, rho, rx);
  tri_right(s, xr, xrx);
  tri_left(s, xr, xxr);
  tri_right(s, rx, rxx);
  const double rate = gen.lambda * gen.lambda;
  Eigen::MatrixXcd out(n, n);
  const std::complex<double> minus_i{0.0, -1.0};
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) {
      const double de = gen.energy * static_cast<double>(r - c);
      out(r, c) = minus_i * de * rho(r, c) + rate * (xrx(r, c) - 0.5 * (xxr(r, c) + rxx(r, c)));
    }
  }
  return out;
}

LindbladSample measure(const Eigen::MatrixXcd& rho, const SingleModeGenerator& gen, double t) {
  LindbladSample s;
  s.t = t;
  const Eigen::Index n = rho.rows();
  std::complex<double> trace = 0.0;
  double energy = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    trace += rho(k, k);
    energy += gen.energy * (k + 0.5) * rho(k, k).real();
  }
  double x = 0.0;
  for (Eigen::Index k = 0; k + 1 < n; ++k) x += 2.0 * gen.x_offdiag[k] * rho(k, k + 1).real();
  const Eigen::MatrixXcd pos = gen.position();
  const std::complex<double> x2 = (rho * pos * pos).trace();
  s.energy = energy;
  s.x_mean = x;
  s.x2_mean = x2.real();
  s.trace_err = std::abs(trace - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(rho, Eigen::EigenvaluesOnly);
  s.min_eig = eig.eigenvalues().minCoeff();
  return s;
}

namespace {

LindbladResult integrate_once(const DensityMatrix& rho0, const SingleModeGenerator& gen,
                              const LindbladOptions& opt) {
  LindbladResult res;
  res.n_max_used = gen.n_max;
  res.stiffness_warning = opt.dt * (gen.n_max * gen.energy + gen.lambda * gen.lambda * gen.n_max / gen.energy) > 0.5;

  const std::uint64_t steps = opt.t_max <= 0.0 ? 0 : static_cast<std::uint64_t>(std::ceil(opt.t_max / opt.dt - 1e-9));
  Eigen::MatrixXcd rho = rho0.rho;
  const Eigen::Index top = gen.n_max;
  auto record = [&](std::uint64_t step) {
    const LindbladSample s = measure(rho, gen, static_cast<double>(step) * opt.dt);
    if (s.min_eig < -1e-6) {
      std::ostringstream msg;
      msg << "lindblad: density matrix lost positivity (min eigenvalue " << s.min_eig << " at t=" << s.t
          << "); truncation n_max=" << gen.n_max << " is too small or dt too large";
      throw NumericalError(msg.str());
    }
    res.series.push_back(s);
  };
  record(0);
  const double h = opt.dt;
  for (std::uint64_t step = 0; step < steps; ++step) {
    const Eigen::MatrixXcd k1 = lindblad_rhs(rho, gen);
    const Eigen::MatrixXcd k2 = lindblad_rhs(rho + 0.5 * h * k1, gen);
    const Eigen::MatrixXcd k3 = lindblad_rhs(rho + 0.5 * h * k2, gen);
    const Eigen::MatrixXcd k4 = lindblad_rhs(rho + h * k3, gen);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    res.top_population = std::max(res.top_population, rho(top, top).real());
    if (!std::isfinite(std::abs(rho(0, 0)))) throw NumericalError("lindblad: non-finite density matrix");
    if ((step + 1) % opt.stride == 0 || step + 1 == steps) record(step + 1);
  }
  return res;
}

}  // namespace

LindbladResult integrate(const DensityMatrix& rho0, const SingleModeGenerator& gen, const LindbladOptions& options) {
  if (!(options.dt > 0.0)) throw ConfigError("lindblad: dt must be > 0");
  if (options.stride < 1) throw ConfigError("lindblad: stride must be >= 1");
  if (rho0.n_max != gen.n_max) throw std::invalid_argument("lindblad: initial state truncation differs from generator");
  LindbladResult res = integrate_once(rho0, gen, options);
  int doublings = 0;
  while (options.auto_extend && res.top_population > 1e-8 && doublings < options.max_doublings) {
    ++doublings;
    const int n_max = gen.n_max << doublings;
    res = integrate_once(rho0.embedded(n_max), SingleModeGenerator::make(gen.energy, gen.lambda, n_max), options);
  }
  return res;
}

}  // namespace stochfield
