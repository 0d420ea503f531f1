#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "stochfield/ensemble.hpp"
#include "stochfield/error.hpp"
#include "stochfield/stats.hpp"

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

DynamicsConfig dynamics(double lambda) {
  DynamicsConfig d;
  d.dt = 0.02;
  d.t_max = 2.0;
  d.lambda = lambda;
  d.snapshot_stride = 10;
  return d;
}

}  // namespace

TEST_SUITE("stats") {
  TEST_CASE("moments merge like a single pass") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(3.0, 2.0);
    Moments all, a, b, c;
    for (int i = 0; i < 1000; ++i) {
      const double x = n(rng);
      all.push(x);
      (i < 300 ? a : i < 700 ? b : c).push(x);
    }
    Moments left = a;
    left.merge(b);
    left.merge(c);
    Moments right = b;
    right.merge(c);
    Moments r2 = a;
    r2.merge(right);
    CHECK(left.count == all.count);
    CHECK(left.mean == doctest::Approx(all.mean).epsilon(1e-12));
    CHECK(left.variance() == doctest::Approx(all.variance()).epsilon(1e-12));
    CHECK(r2.variance() == doctest::Approx(left.variance()).epsilon(1e-12));
    CHECK(all.stderr_mean() == doctest::Approx(std::sqrt(all.variance() / 1000)));
    Moments empty;
    empty.merge(a);
    CHECK(empty.mean == a.mean);
  }

  TEST_CASE("exact line") {
    std::vector<double> t, y;
    for (int i = 0; i < 10; ++i) {
      t.push_back(0.5 * i);
      y.push_back(3.0 * t.back() + 1.0);
    }
    const SlopeFit f = fit_linear(t, y);
    CHECK(f.slope == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f.slope_stderr < 1e-14);
    CHECK(f.r2 == doctest::Approx(1.0));
    const std::vector<double> sig(10, 0.1);
    const SlopeFit w = fit_linear(t, y, sig);
    CHECK(w.slope == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(w.intercept == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("noisy and constant series") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n;
    std::vector<double> t, y, c;
    for (int i = 0; i < 1000; ++i) {
      t.push_back(0.01 * i);
      y.push_back(t.back() + n(rng));
      c.push_back(2.0 + n(rng));
    }
    const SlopeFit f = fit_linear(t, y);
    CHECK(std::abs(f.slope - 1.0) < 3.0 * f.slope_stderr);
    const SlopeFit g = fit_linear(t, c);
    CHECK(std::abs(g.slope) < 3.0 * g.slope_stderr);
  }

  TEST_CASE("bad fits are rejected") {
    const std::vector<double> two{1.0, 2.0};
    CHECK_THROWS(fit_linear(two, two));
    const std::vector<double> same{1.0, 1.0, 1.0}, y{1.0, 2.0, 3.0};
    CHECK_THROWS(fit_linear(same, y));
  }
}

TEST_SUITE("ensemble") {
  TEST_CASE("no coupling, no variance") {
    const ModeTable t(spec_of(1, 8, 8.0));
    EnsembleOptions o;
    o.trajectories = 2;
    const EnsembleStats s = run_ensemble(t, KernelInit::vacuum(t), dynamics(0.0), o);
    CHECK(s.count() == 2);
    for (const Moments& m : s.series) CHECK(m.variance() == 0.0);
  }

  TEST_CASE("fewer than two trajectories is a config error") {
    const ModeTable t(spec_of(1, 8, 8.0));
    EnsembleOptions o;
    o.trajectories = 1;
    CHECK_THROWS_AS(run_ensemble(t, KernelInit::vacuum(t), dynamics(0.1), o), ConfigError);
    o.trajectories = 4;
    CHECK_THROWS_AS(run_ensemble(t, KernelInit::zero(t), dynamics(0.1), o), ConfigError);
  }

  TEST_CASE("split runs merge to the whole") {
    const ModeTable t(spec_of(1, 8, 8.0));
    EnsembleOptions o;
    o.master_seed = 5;
    o.trajectories = 300;
    o.track_classical = true;
    const EnsembleStats whole = run_ensemble(t, KernelInit::vacuum(t), dynamics(0.3), o);
    o.trajectories = 150;
    EnsembleStats a = run_ensemble(t, KernelInit::vacuum(t), dynamics(0.3), o);
    o.first_trajectory = 150;
    const EnsembleStats b = run_ensemble(t, KernelInit::vacuum(t), dynamics(0.3), o);
    a.merge(b);
    REQUIRE(a.series.size() == whole.series.size());
    for (std::size_t i = 0; i < a.series.size(); ++i) {
      CHECK(a.series[i].count == whole.series[i].count);
      CHECK(std::abs(a.series[i].mean - whole.series[i].mean) <= 1e-12 * (1 + std::abs(whole.series[i].mean)));
      CHECK(std::abs(a.series[i].variance() - whole.series[i].variance()) <= 1e-12 * (1 + whole.series[i].variance()));
    }
  }

  TEST_CASE("results do not depend on the worker count") {
    const ModeTable t(spec_of(2, 4, 3.0));
    EnsembleOptions o;
    o.master_seed = 9;
    o.trajectories = 200;
    o.workers = 1;
    const EnsembleStats one = run_ensemble(t, KernelInit::vacuum(t), dynamics(0.2), o);
    o.workers = 3;
    const EnsembleStats three = run_ensemble(t, KernelInit::vacuum(t), dynamics(0.2), o);
    for (std::size_t i = 0; i < one.series.size(); ++i) {
      CHECK(std::memcmp(&one.series[i].mean, &three.series[i].mean, sizeof(double)) == 0);
      CHECK(std::memcmp(&one.series[i].m2, &three.series[i].m2, sizeof(double)) == 0);
    }
  }

  TEST_CASE("standard errors shrink as 1/sqrt(M)") {
    const ModeTable t(spec_of(1, 8, 8.0));
    std::vector<double> se;
    for (std::uint64_t m : {250, 1000, 4000}) {
      EnsembleOptions o;
      o.master_seed = 3;
      o.trajectories = m;
      o.track_modes = false;
      const EnsembleStats s = run_ensemble(t, KernelInit::vacuum(t), dynamics(0.2), o);
      se.push_back(s.at(s.times.size() - 1, "E1").stderr_mean());
    }
    CHECK(se[0] / se[1] == doctest::Approx(2.0).epsilon(0.15));
    CHECK(se[1] / se[2] == doctest::Approx(2.0).epsilon(0.15));
  }

  TEST_CASE("energy rate on a small ensemble") {
    const ModeTable t(spec_of(1, 8, 8.0));
    DynamicsConfig d;
    d.dt = 0.02;
    d.t_max = 10.0;
    d.lambda = 0.1;
    d.snapshot_stride = 50;
    EnsembleOptions o;
    o.master_seed = 12;
    o.trajectories = 1000;
    o.track_modes = false;
    const EnsembleStats s = run_ensemble(t, KernelInit::vacuum(t), d, o);
    const EnergyRateReport r = energy_rate(s, t, d.lambda, "E1");
    CHECK(r.expected_slope == doctest::Approx(0.04));
    CHECK(std::abs(r.z_score) < 3.0);
    CHECK(r.trajectories == 1000);
  }
}
