#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "stochfield/error.hpp"
#include "stochfield/lattice.hpp"
#include "stochfield/verify/oracles.hpp"

using namespace stochfield;

namespace {

LatticeSpec spec_of(int dim, int sites, double length = 8.0, double mass = 1.0) {
  LatticeSpec s;
  s.dim = dim;
  s.sites_per_dim = sites;
  s.box_length = length;
  s.mass = mass;
  return s;
}

std::set<int> indices_of(const ModeTable& t, ModeClass c) {
  std::set<int> out;
  for (const Mode& m : t.modes())
    if (m.cls == c) out.insert(m.index[0]);
  return out;
}

}  // namespace

TEST_SUITE("lattice") {
  TEST_CASE("one-dimensional enumeration, N_s = 4") {
    const ModeTable t(spec_of(1, 4));
    CHECK(t.size() == 4);
    CHECK(indices_of(t, ModeClass::self_conjugate) == std::set<int>{0, 2});
    CHECK(indices_of(t, ModeClass::independent) == std::set<int>{1});
    CHECK(indices_of(t, ModeClass::dependent) == std::set<int>{-1});
  }

  TEST_CASE("one-dimensional enumeration, N_s = 2") {
    const ModeTable t(spec_of(1, 2));
    CHECK(indices_of(t, ModeClass::self_conjugate) == std::set<int>{0, 1});
    CHECK(t.count(ModeClass::independent) == 0);
  }

  TEST_CASE("partition identity and involution over dim 1..3, N_s 2..16") {
    for (int dim = 1; dim <= 3; ++dim) {
      for (int ns = 2; ns <= (dim == 3 ? 10 : 16); ++ns) {
        const ModeTable t(spec_of(dim, ns));
        CAPTURE(dim);
        CAPTURE(ns);
        CHECK(2 * t.count(ModeClass::independent) + t.count(ModeClass::self_conjugate) == t.size());
        CHECK(t.size() == static_cast<std::size_t>(std::pow(ns, dim)));
        for (const Mode& m : t.modes()) {
          const Mode& q = t.mode(m.partner);
          CHECK(q.partner == m.id);
          for (int d = 0; d < dim; ++d) CHECK(((m.index[d] + q.index[d]) % ns + ns) % ns == 0);
          if (m.cls == ModeClass::self_conjugate) CHECK(m.partner == m.id);
          if (m.cls == ModeClass::independent) CHECK(q.cls == ModeClass::dependent);
          CHECK(m.energy >= t.spec().mass);
        }
      }
    }
  }

  TEST_CASE("Nyquist-plane partners in two dimensions") {
    // (2,1) and (2,-1) are conjugate on N_s = 4; exactly one is independent.
    const ModeTable t(spec_of(2, 4));
    const Mode& a = t.mode(t.find(IndexVec{2, 1, 0}));
    const Mode& b = t.mode(t.find(IndexVec{2, -1, 0}));
    CHECK(a.partner == b.id);
    CHECK(((a.cls == ModeClass::independent) != (b.cls == ModeClass::independent)));
  }

  TEST_CASE("dispersion") {
    const double p0[] = {0.0};
    const double p1[] = {3.0, 0.0, 0.0};
    const double p2[] = {1.5, -2.0};
    CHECK(dispersion(p0, 1.0) == doctest::Approx(1.0));
    CHECK(dispersion(p1, 4.0) == doctest::Approx(5.0));
    CHECK(dispersion(p2, 0.0) == doctest::Approx(2.5));
  }

  TEST_CASE("dictionary identities") {
    for (int dim = 1; dim <= 3; ++dim) {
      const LatticeSpec s = spec_of(dim, 6, 5.0);
      CHECK(s.volume() * s.momentum_cell() == doctest::Approx(std::pow(kTwoPi, dim)).epsilon(1e-14));
      CHECK(s.momentum_cell() * s.mode_count() == doctest::Approx(std::pow(kTwoPi / s.lattice_spacing(), dim)).epsilon(1e-14));
      CHECK(s.kernel_measure() == doctest::Approx(std::pow(kTwoPi, 2 * dim) / s.volume()).epsilon(1e-14));
    }
  }

  TEST_CASE("invalid specs are rejected") {
    CHECK_THROWS_AS(ModeTable(spec_of(0, 4)), ConfigError);
    CHECK_THROWS_AS(ModeTable(spec_of(4, 4)), ConfigError);
    CHECK_THROWS_AS(ModeTable(spec_of(1, 0)), ConfigError);
    CHECK_THROWS_AS(ModeTable(spec_of(1, 4, -1.0)), ConfigError);
  }

  TEST_CASE("zero amplitudes give a zero field") {
    const ModeTable t(spec_of(2, 5));
    const std::vector<Complex> a(t.size());
    for (double v : to_position_field(t, a)) CHECK(v == 0.0);
  }

  TEST_CASE("single mode pair gives 2 dp cos(p x)") {
    const ModeTable t(spec_of(1, 8, 8.0));
    std::vector<Complex> a(t.size());
    const std::size_t id = t.find(IndexVec{1, 0, 0});
    a[id] = 1.0;
    a[t.mode(id).partner] = 1.0;
    const auto field = to_position_field(t, a);
    const auto direct = verify::direct_momentum_to_position(t, a);
    const double dp = t.spec().momentum_spacing();
    const double la = t.spec().lattice_spacing();
    for (std::size_t j = 0; j < field.size(); ++j) {
      CHECK(field[j] == doctest::Approx(direct[j].real()).epsilon(1e-13));
      CHECK(field[j] == doctest::Approx(2.0 * dp * std::cos(dp * la * j)).epsilon(1e-13));
    }
  }

  TEST_CASE("asymmetric amplitudes are rejected") {
    const ModeTable t(spec_of(1, 8));
    std::vector<Complex> a(t.size());
    a[t.find(IndexVec{1, 0, 0})] = 1.0;
    CHECK_THROWS(to_position_field(t, a));
  }

  TEST_CASE("round trip and direct-sum agreement on random symmetric amplitudes") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    for (int dim = 1; dim <= 3; ++dim) {
      for (int ns : {3, 4, 5}) {
        const ModeTable t(spec_of(dim, ns, 3.0));
        std::vector<Complex> per_dof(t.dof_count());
        for (auto& v : per_dof) v = {n(rng), n(rng)};
        const auto full = expand_to_full(t, per_dof);
        const auto field = to_position_field(t, full);
        const auto direct = verify::direct_momentum_to_position(t, full);
        for (std::size_t j = 0; j < field.size(); ++j) {
          CHECK(std::abs(direct[j].imag()) < 1e-12);
          CHECK(field[j] == doctest::Approx(direct[j].real()).epsilon(1e-12));
        }
        const auto back = to_momentum_amplitudes(t, field);
        const std::vector<Complex> fc(field.begin(), field.end());
        const auto back_direct = verify::direct_position_to_momentum(t, fc);
        for (std::size_t k = 0; k < full.size(); ++k) {
          CHECK(std::abs(back[k] - full[k]) <= 1e-12 * (1.0 + std::abs(full[k])));
          CHECK(std::abs(back_direct[k] - full[k]) <= 1e-12 * (1.0 + std::abs(full[k])));
        }
      }
    }
  }
}
