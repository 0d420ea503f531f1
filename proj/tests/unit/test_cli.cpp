#include <doctest.h>

#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "stochfield_cli/config.hpp"
#include "stochfield_cli/io.hpp"

using namespace stochfield;
using namespace stochfield::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "stochfield_unit";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::string> issues_of(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigErrors& e) {
    return e.issues();
  }
  return {};
}

bool mentions(const std::vector<std::string>& issues, std::string_view what) {
  for (const auto& s : issues)
    if (s.find(what) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("minimal config takes defaults") {
    const RunConfig c = parse_config("[lattice]\ndim = 1\nsites = 4\nlength = 4.0\n");
    CHECK(c.lattice.dim == 1);
    CHECK(c.lattice.mass == 1.0);
    CHECK(c.dynamics.scheme == Scheme::exact);
    CHECK(c.dynamics.lambda == 0.1);
    CHECK(c.ensemble.trajectories == 1000);
    CHECK(c.init.v0 == "vacuum");
    const double emax = ModeTable(c.lattice).max_energy();
    CHECK(c.dynamics.dt == doctest::Approx(0.01 / emax));
  }

  TEST_CASE("empty text is the default run") {
    const RunConfig c = parse_config("");
    CHECK(c.lattice.dim == 3);
    CHECK(c.dynamics.dt > 0.0);
  }

  TEST_CASE("explicit values are kept") {
    const RunConfig c = parse_config(
        "[dynamics]\ndt = 0.002\nt_max = 3\nlambda = 0.25\nscheme = \"euler\"\nsnapshot_stride = 7\n"
        "[init]\nv0 = \"scaled\"\nscale_re = 2.0\n[output]\nformats = [\"csv\", \"noise_csv\"]\n");
    CHECK(c.dynamics.dt == 0.002);
    CHECK(c.dynamics.t_max == 3.0);
    CHECK(c.dynamics.scheme == Scheme::euler);
    CHECK(c.dynamics.snapshot_stride == 7);
    CHECK_FALSE(c.dt_defaulted);
    CHECK(c.output.wants("noise_csv"));
    CHECK_FALSE(c.output.wants("noise_bin"));
  }

  TEST_CASE("negative lambda") {
    const auto issues = issues_of("[dynamics]\nlambda = -1.0\n");
    REQUIRE(issues.size() == 1);
    CHECK(issues[0] == "lambda must be ≥ 0");
  }

  TEST_CASE("euler cannot start from an edge kernel") {
    const auto issues = issues_of("[dynamics]\nscheme = \"euler\"\n[init]\nv0 = \"zero\"\n");
    CHECK(mentions(issues, "requires scheme = exact"));
  }

  TEST_CASE("unknown keys and sections") {
    CHECK(mentions(issues_of("[lattice]\nsite = 4\n"), "unknown key 'lattice.site'"));
    CHECK(mentions(issues_of("[latice]\ndim = 1\n"), "unknown section 'latice'"));
    CHECK(mentions(issues_of("[lattice]\ndim = \"one\"\n"), "lattice.dim"));
  }

  TEST_CASE("all issues are collected") {
    const auto issues = issues_of("[lattice]\nsites = 1\n[dynamics]\nlambda = -2\n[ensemble]\ntrajectories = 1\n");
    CHECK(issues.size() == 3);
  }

  TEST_CASE("syntax errors are config errors") { CHECK_THROWS_AS(parse_config("[lattice\n"), ConfigError); }
}

TEST_SUITE("io") {
  TEST_CASE("doubles round trip through text") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
      const double x = u(rng) * std::pow(10.0, (i % 40) - 20);
      const std::string s = format_double(x);
      double y = 0.0;
      std::from_chars(s.data(), s.data() + s.size(), y);
      CHECK(std::memcmp(&x, &y, sizeof x) == 0);
    }
    CHECK(format_double(0.5) == "0.5");
  }

  TEST_CASE("csv quoting") {
    const fs::path p = scratch("quote.csv");
    {
      CsvWriter w(p, {"a", "b"});
      w.add(std::string_view("x,y")).add(std::string_view("say \"hi\""));
      w.end_row();
      w.add(1).add(2.5);
      w.end_row();
      w.close();
    }
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n1,2.5\n");
  }

  TEST_CASE("noise files round trip") {
    LatticeSpec spec;
    spec.dim = 2;
    spec.sites_per_dim = 4;
    spec.box_length = 3.0;
    const ModeTable t(spec);
    NoiseDump d;
    d.lattice = spec;
    d.dt = 0.01;
    d.master_seed = 17;
    d.trajectory_id = 3;
    for (std::size_t m : t.dofs()) d.dof_modes.push_back(static_cast<std::uint32_t>(m));
    for (std::uint64_t k = 0; k < 20; ++k) d.slices.push_back(sample_slice(t, d.dt, StreamSpec{17, 3}, k));
    for (const char* name : {"n.bin", "n.csv"}) {
      const fs::path p = scratch(name);
      write_noise(p, d);
      const NoiseDump r = read_noise(p);
      CHECK(r.dt == d.dt);
      CHECK(r.master_seed == 17);
      CHECK(r.trajectory_id == 3);
      CHECK(r.lattice.box_length == spec.box_length);
      CHECK(r.dof_modes == d.dof_modes);
      REQUIRE(r.slices.size() == d.slices.size());
      for (std::size_t k = 0; k < d.slices.size(); ++k) CHECK(r.slices[k].increments == d.slices[k].increments);
    }
  }

  TEST_CASE("truncated noise file is rejected") {
    const fs::path p = scratch("bad.bin");
    std::ofstream(p, std::ios::binary) << "SQFNOISE";
    CHECK_THROWS(read_noise(p));
  }

  TEST_CASE("sha256 of a known string") {
    const fs::path p = scratch("abc.txt");
    write_file_atomic(p, "abc");
    CHECK(sha256_file(p) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }
}
