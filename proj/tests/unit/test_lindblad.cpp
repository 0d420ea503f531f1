#include <doctest.h>

#include <complex>
#include <random>

#include "stochfield/error.hpp"
#include "stochfield/lindblad.hpp"
#include "stochfield/stats.hpp"

using namespace stochfield;

namespace {

Eigen::MatrixXcd random_density(int dim, int support, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
  for (int i = 0; i < support; ++i)
    for (int j = 0; j < support; ++j) a(i, j) = {n(rng), n(rng)};
  Eigen::MatrixXcd rho = a * a.adjoint();
  return rho / rho.trace();
}

// Dense reference: -i[H,ρ] + λ²(xρx - ½{x²,ρ}).
Eigen::MatrixXcd dense_rhs(const Eigen::MatrixXcd& rho, const SingleModeGenerator& g) {
  const Eigen::MatrixXcd h = g.hamiltonian(), x = g.position(), x2 = x * x;
  const std::complex<double> i{0.0, 1.0};
  return -i * (h * rho - rho * h) + g.lambda * g.lambda * (x * rho * x - 0.5 * (x2 * rho + rho * x2));
}

}  // namespace

TEST_SUITE("lindblad") {
  TEST_CASE("generator structure") {
    const auto g = SingleModeGenerator::make(2.0, 0.3, 10);
    const Eigen::MatrixXcd x = g.position();
    CHECK((x - x.adjoint()).norm() == 0.0);
    CHECK(std::abs(x(3, 4) - std::sqrt(4.0 / 4.0)) < 1e-15);
    CHECK(std::abs(x(0, 2)) == 0.0);
    CHECK(g.hamiltonian()(0, 0).real() == doctest::Approx(1.0));
  }

  TEST_CASE("vacuum is stationary without coupling") {
    const auto g = SingleModeGenerator::make(1.0, 0.0, 20);
    CHECK(lindblad_rhs(DensityMatrix::vacuum(1.0, 20).rho, g).norm() == 0.0);
  }

  TEST_CASE("tridiagonal rhs matches dense algebra and preserves trace") {
    const auto g = SingleModeGenerator::make(1.3, 0.7, 15);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Eigen::MatrixXcd rho = random_density(16, 16, seed);
      const Eigen::MatrixXcd r = lindblad_rhs(rho, g);
      CHECK((r - dense_rhs(rho, g)).norm() < 1e-12);
      CHECK(std::abs(r.trace()) < 1e-12);
    }
  }

  TEST_CASE("energy rate is lambda^2/2 below the truncation edge") {
    for (double e : {0.5, 1.0, 2.0}) {
      const auto g = SingleModeGenerator::make(e, 0.4, 20);
      const Eigen::MatrixXcd rho = random_density(21, 18, 7);
      const std::complex<double> rate = (g.hamiltonian() * lindblad_rhs(rho, g)).trace();
      CHECK(rate.real() == doctest::Approx(0.08).epsilon(1e-12));
      CHECK(std::abs(rate.imag()) < 1e-12);
    }
  }

  TEST_CASE("coherent state energy is conserved without coupling") {
    const auto g = SingleModeGenerator::make(1.0, 0.0, 40);
    LindbladOptions lo;
    lo.dt = 1e-3;
    lo.t_max = 2.0;
    lo.stride = 100;
    const auto res = integrate(DensityMatrix::coherent(1.0, 40, {1.2, 0.5}), g, lo);
    for (const auto& s : res.series) {
      CHECK(s.energy == doctest::Approx(res.series.front().energy).epsilon(1e-10));
      CHECK(s.trace_err < 1e-12);
    }
    // ⟨x⟩ oscillates at frequency E.
    CHECK(std::abs(res.series.front().x_mean) > 0.5);
  }

  TEST_CASE("vacuum energy rate by fit") {
    LindbladOptions lo;
    lo.dt = 2e-3;
    lo.t_max = 4.0;
    lo.stride = 250;
    const auto res = integrate(DensityMatrix::vacuum(1.0, 30), SingleModeGenerator::make(1.0, 0.1, 30), lo);
    std::vector<double> t, h;
    for (const auto& s : res.series) {
      t.push_back(s.t);
      h.push_back(s.energy);
    }
    CHECK(res.series.front().energy == doctest::Approx(0.5));
    CHECK(fit_linear(t, h).slope == doctest::Approx(0.005).epsilon(1e-9));
  }

  TEST_CASE("truncation is raised when the top level fills") {
    LindbladOptions lo;
    lo.dt = 1e-3;
    lo.t_max = 3.0;
    lo.stride = 1000;
    const auto res = integrate(DensityMatrix::vacuum(1.0, 4), SingleModeGenerator::make(1.0, 1.0, 4), lo);
    CHECK(res.n_max_used > 4);
  }

  TEST_CASE("positivity loss aborts") {
    LindbladOptions lo;
    lo.dt = 0.5;
    lo.t_max = 50.0;
    lo.auto_extend = false;
    CHECK_THROWS_AS(integrate(DensityMatrix::coherent(1.0, 20, {1.0, 0.0}), SingleModeGenerator::make(1.0, 0.5, 20), lo),
                    NumericalError);
  }
}
