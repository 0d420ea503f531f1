#include <doctest.h>

#include <cmath>
#include <cstring>

#include "stochfield/noise.hpp"
#include "stochfield/philox.hpp"
#include "stochfield/stats.hpp"
#include "stochfield/verify/oracles.hpp"

using namespace stochfield;

namespace {

LatticeSpec spec_of(int dim, int sites, double length, double mass = 1.0) {
  LatticeSpec s;
  s.dim = dim;
  s.sites_per_dim = sites;
  s.box_length = length;
  s.mass = mass;
  return s;
}

}  // namespace

TEST_SUITE("noise") {
  TEST_CASE("Philox4x32-10 known-answer vectors") {
    using P = Philox4x32;
    CHECK(P::generate({0, 0, 0, 0}, {0, 0}) == P::Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(P::generate({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          P::Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(P::generate({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          P::Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
  }

  TEST_CASE("uniforms lie in (0, 1]") {
    CHECK(uniform_open_closed(0, 0) > 0.0);
    CHECK(uniform_open_closed(0xffffffff, 0xffffffff) <= 1.0);
  }

  TEST_CASE("component variance formula") {
    const LatticeSpec s = spec_of(2, 4, 3.0);
    CHECK(noise_component_variance(s, 0.01) == doctest::Approx(9.0 * 0.01 / (2.0 * std::pow(kTwoPi, 4))));
  }

  TEST_CASE("dt = 0 gives zero increments") {
    const ModeTable t(spec_of(1, 8, 8.0));
    const NoiseSlice s = sample_slice(t, 0.0, StreamSpec{1, 2}, 3);
    for (const Complex& w : s.increments) CHECK(w == Complex{});
    for (double x : to_position_noise(s, t)) CHECK(x == 0.0);
  }

  TEST_CASE("negative dt is rejected") {
    const ModeTable t(spec_of(1, 8, 8.0));
    CHECK_THROWS(sample_slice(t, -0.1, StreamSpec{}, 0));
  }

  TEST_CASE("slices are addressed positionally and bit-reproducible") {
    const ModeTable t(spec_of(2, 4, 3.0));
    const NoiseSlice a = sample_slice(t, 0.01, StreamSpec{42, 9}, 7);
    const NoiseSlice b = sample_slice(t, 0.01, StreamSpec{42, 9}, 7);
    REQUIRE(a.increments.size() == b.increments.size());
    CHECK(std::memcmp(a.increments.data(), b.increments.data(), a.increments.size() * sizeof(Complex)) == 0);
    const NoiseSlice c = sample_slice(t, 0.01, StreamSpec{42, 10}, 7);
    CHECK(c.increments[0] != a.increments[0]);
    for (std::size_t d = 0; d < t.dof_count(); ++d)
      if (t.dof_mode(d).cls == ModeClass::self_conjugate) CHECK(a.increments[d].imag() == 0.0);
  }

  TEST_CASE("position noise is real and matches the direct sum") {
    const ModeTable t(spec_of(2, 4, 3.0));
    const NoiseSlice s = sample_slice(t, 0.01, StreamSpec{5, 0}, 0);
    const auto full = expand_to_full(t, s.increments);
    const auto x = to_position_noise(s, t);
    // dW(x) = a^dim dp^dim Σ_p e^{-ip·x} dW(p): the direct oracle computes e^{+ip·x},
    // so feed it the conjugated spectrum.
    std::vector<Complex> conj_full(full.size());
    for (std::size_t k = 0; k < full.size(); ++k) conj_full[k] = std::conj(full[k]);
    const auto ref = verify::direct_momentum_to_position(t, conj_full);
    for (std::size_t j = 0; j < x.size(); ++j) {
      CHECK(std::abs(ref[j].imag()) < 1e-14);
      CHECK(x[j] == doctest::Approx(t.spec().cell_volume() * ref[j].real()).epsilon(1e-12));
    }
  }

  TEST_CASE("single cell variance and lag-1 independence") {
    const LatticeSpec spec = spec_of(1, 8, 8.0);
    const ModeTable t(spec);
    const double dt = 0.02;
    Moments cell, lag;
    double prev = 0.0;
    NoiseSlice s;
    const std::uint64_t n = 100000;
    for (std::uint64_t k = 0; k < n; ++k) {
      sample_slice_into(t, dt, StreamSpec{11, 0}, k, s);
      const double x = to_position_noise(s, t)[3];
      cell.push(x);
      const double re = s.increments[1].real() / std::sqrt(noise_component_variance(spec, dt));
      if (k > 0) lag.push(prev * re);
      prev = re;
    }
    CHECK(std::abs(verify::chi2_variance_z(cell.variance(), cell.count, dt * spec.cell_volume())) < 5.0);
    CHECK(std::abs(verify::mean_z(lag.mean, lag.stderr_mean())) < 5.0);
  }

  TEST_CASE("covariance of stacked components is diagonal") {
    const LatticeSpec spec = spec_of(1, 6, 4.0);
    const ModeTable t(spec);
    const double dt = 0.01, var = noise_component_variance(spec, dt);
    std::vector<double> comp;
    const std::uint64_t n = 20000;
    std::vector<std::vector<double>> rows;
    NoiseSlice s;
    for (std::uint64_t k = 0; k < n; ++k) {
      sample_slice_into(t, dt, StreamSpec{12, 3}, k, s);
      comp.clear();
      for (std::size_t d = 0; d < t.dof_count(); ++d) {
        const bool sc = t.dof_mode(d).cls == ModeClass::self_conjugate;
        comp.push_back(s.increments[d].real() / std::sqrt(sc ? 2 * var : var));
        if (!sc) comp.push_back(s.increments[d].imag() / std::sqrt(var));
      }
      rows.push_back(comp);
    }
    const std::size_t m = rows[0].size();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i; j < m; ++j) {
        Moments c;
        for (const auto& r : rows) c.push(r[i] * r[j]);
        if (i == j) {
          CHECK(std::abs((c.mean - 1.0) / std::sqrt(2.0 / n)) < 5.0);
        } else {
          CHECK(std::abs(verify::mean_z(c.mean, c.stderr_mean())) < 5.0);
        }
      }
    }
  }

  TEST_CASE("recorded noise replays and refuses to run past its end") {
    const ModeTable t(spec_of(1, 4, 4.0));
    std::vector<NoiseSlice> v{sample_slice(t, 0.1, StreamSpec{}, 0), sample_slice(t, 0.1, StreamSpec{}, 1)};
    const RecordedNoise r(v);
    NoiseSlice out;
    r.fill(1, out);
    CHECK(out.increments == v[1].increments);
    CHECK_THROWS(r.fill(2, out));
  }
}
