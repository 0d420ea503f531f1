#include "stochfield_cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <toml.hpp>

#include "stochfield_cli/io.hpp"

namespace stochfield::cli {

namespace {

std::string join_lines(const std::vector<std::string>& v) {
  std::string s = "invalid configuration:";
  for (const auto& i : v) s += "\n  - " + i;
  return s;
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"lattice", {"dim", "sites", "length", "mass"}},
      {"dynamics", {"dt", "t_max", "lambda", "scheme", "snapshot_stride"}},
      {"init", {"v0", "scale_re", "scale_im", "v0_file", "mu0", "mu0_file"}},
      {"ensemble", {"trajectories", "master_seed"}},
      {"lindblad", {"n_max", "enabled", "energy", "dt"}},
      {"output", {"dir", "formats"}},
  };
  return s;
}

class Reader {
 public:
  explicit Reader(std::vector<std::string>& issues) : issues_(issues) {}

  void number(const toml::table& t, const std::string& sec, const char* key, double& out) {
    const toml::node* n = t.get(key);
    if (!n) return;
    if (auto v = n->value<double>()) {
      out = *v;
      return;
    }
    issues_.push_back(sec + "." + key + " must be a number");
  }

  template <class Int>
  void integer(const toml::table& t, const std::string& sec, const char* key, Int& out) {
    const toml::node* n = t.get(key);
    if (!n) return;
    if (!n->is_integer()) {
      issues_.push_back(sec + "." + key + " must be an integer");
      return;
    }
    const std::int64_t v = n->as_integer()->get();
    if constexpr (std::is_unsigned_v<Int>) {
      if (v < 0) {
        issues_.push_back(sec + "." + key + " must be >= 0");
        return;
      }
    }
    out = static_cast<Int>(v);
  }

  void string(const toml::table& t, const std::string& sec, const char* key, std::string& out) {
    const toml::node* n = t.get(key);
    if (!n) return;
    if (auto v = n->value<std::string>()) {
      out = *v;
      return;
    }
    issues_.push_back(sec + "." + key + " must be a string");
  }

  void boolean(const toml::table& t, const std::string& sec, const char* key, bool& out) {
    const toml::node* n = t.get(key);
    if (!n) return;
    if (auto v = n->value<bool>()) {
      out = *v;
      return;
    }
    issues_.push_back(sec + "." + key + " must be a boolean");
  }

 private:
  std::vector<std::string>& issues_;
};

void collect_issues(const RunConfig& c, std::vector<std::string>& issues) {
  const LatticeSpec& l = c.lattice;
  if (l.dim < 1 || l.dim > 3) issues.push_back("lattice.dim must be 1, 2 or 3");
  if (l.sites_per_dim < 2) issues.push_back("lattice.sites must be >= 2");
  if (!(l.box_length > 0.0)) issues.push_back("lattice.length must be > 0");
  if (!(l.mass >= 0.0)) issues.push_back("lattice.mass must be >= 0");

  const DynamicsConfig& d = c.dynamics;
  if (!c.dt_defaulted && !(d.dt > 0.0)) issues.push_back("dynamics.dt must be > 0");
  if (!(d.t_max > 0.0)) issues.push_back("dynamics.t_max must be > 0");
  if (!(d.lambda >= 0.0)) issues.push_back("lambda must be ≥ 0");
  if (d.snapshot_stride < 1) issues.push_back("dynamics.snapshot_stride must be >= 1");

  static const std::set<std::string> v0_kinds{"vacuum", "scaled", "zero", "deterministic", "file"};
  const InitConfig& i = c.init;
  if (!v0_kinds.count(i.v0)) issues.push_back("init.v0 must be one of vacuum, scaled, zero, deterministic, file");
  if (i.v0 == "scaled" && !(i.scale_re > 0.0)) issues.push_back("init.scale_re must be > 0 for init.v0 = scaled");
  if (i.v0 == "file" && i.v0_file.empty()) issues.push_back("init.v0_file is required for init.v0 = file");
  if (i.mu0 != "zero" && i.mu0 != "file") issues.push_back("init.mu0 must be zero or file");
  if (i.mu0 == "file" && i.mu0_file.empty()) issues.push_back("init.mu0_file is required for init.mu0 = file");
  if (d.scheme == Scheme::euler && (i.v0 == "zero" || i.v0 == "deterministic"))
    issues.push_back("scheme = euler is incompatible with init.v0 = " + i.v0 + " (requires scheme = exact)");

  if (c.ensemble.trajectories < 2) issues.push_back("ensemble.trajectories must be >= 2");
  if (c.lindblad.n_max < 2) issues.push_back("lindblad.n_max must be >= 2");
  if (!(c.lindblad.energy >= 0.0)) issues.push_back("lindblad.energy must be >= 0");
  if (!(c.lindblad.dt >= 0.0)) issues.push_back("lindblad.dt must be >= 0");

  static const std::set<std::string> formats{"csv", "noise_bin", "noise_csv"};
  for (const auto& f : c.output.formats)
    if (!formats.count(f)) issues.push_back("output.formats: unknown format '" + f + "' (csv, noise_bin, noise_csv)");
  if (c.output.dir.empty()) issues.push_back("output.dir must not be empty");
}

std::filesystem::path resolve(const RunConfig& c, const std::string& file) {
  std::filesystem::path p(file);
  return p.is_relative() && !c.base_dir.empty() ? c.base_dir / p : p;
}

}  // namespace

bool OutputConfig::wants(std::string_view f) const {
  return std::find(formats.begin(), formats.end(), f) != formats.end();
}

ConfigErrors::ConfigErrors(std::vector<std::string> issues)
    : ConfigError(join_lines(issues)), issues_(std::move(issues)) {}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "TOML syntax error at line " << e.source().begin.line << ": " << e.description();
    throw ConfigErrors({msg.str()});
  }

  std::vector<std::string> issues;
  RunConfig c;
  c.base_dir = base_dir;
  Reader rd(issues);

  for (auto&& [key, node] : root) {
    const std::string sec(key.str());
    auto it = schema().find(sec);
    if (it == schema().end()) {
      issues.push_back("unknown section '" + sec + "'");
      continue;
    }
    const toml::table* t = node.as_table();
    if (!t) {
      issues.push_back("'" + sec + "' must be a table");
      continue;
    }
    for (auto&& [k, v] : *t) {
      (void)v;
      if (!it->second.count(std::string(k.str()))) issues.push_back("unknown key '" + sec + "." + std::string(k.str()) + "'");
    }
  }

  auto section = [&](const char* name) -> const toml::table* { return root[name].as_table(); };
  if (const auto* t = section("lattice")) {
    rd.integer(*t, "lattice", "dim", c.lattice.dim);
    rd.integer(*t, "lattice", "sites", c.lattice.sites_per_dim);
    rd.number(*t, "lattice", "length", c.lattice.box_length);
    rd.number(*t, "lattice", "mass", c.lattice.mass);
  }
  if (const auto* t = section("dynamics")) {
    if (t->contains("dt")) c.dt_defaulted = false;
    rd.number(*t, "dynamics", "dt", c.dynamics.dt);
    rd.number(*t, "dynamics", "t_max", c.dynamics.t_max);
    rd.number(*t, "dynamics", "lambda", c.dynamics.lambda);
    std::string scheme = to_string(c.dynamics.scheme);
    rd.string(*t, "dynamics", "scheme", scheme);
    if (scheme == "exact") {
      c.dynamics.scheme = Scheme::exact;
    } else if (scheme == "euler") {
      c.dynamics.scheme = Scheme::euler;
    } else {
      issues.push_back("dynamics.scheme must be exact or euler");
    }
    rd.integer(*t, "dynamics", "snapshot_stride", c.dynamics.snapshot_stride);
  }
  if (const auto* t = section("init")) {
    rd.string(*t, "init", "v0", c.init.v0);
    rd.number(*t, "init", "scale_re", c.init.scale_re);
    rd.number(*t, "init", "scale_im", c.init.scale_im);
    rd.string(*t, "init", "v0_file", c.init.v0_file);
    rd.string(*t, "init", "mu0", c.init.mu0);
    rd.string(*t, "init", "mu0_file", c.init.mu0_file);
  }
  if (const auto* t = section("ensemble")) {
    rd.integer(*t, "ensemble", "trajectories", c.ensemble.trajectories);
    rd.integer(*t, "ensemble", "master_seed", c.ensemble.master_seed);
  }
  if (const auto* t = section("lindblad")) {
    rd.integer(*t, "lindblad", "n_max", c.lindblad.n_max);
    rd.boolean(*t, "lindblad", "enabled", c.lindblad.enabled);
    rd.number(*t, "lindblad", "energy", c.lindblad.energy);
    rd.number(*t, "lindblad", "dt", c.lindblad.dt);
  }
  if (const auto* t = section("output")) {
    rd.string(*t, "output", "dir", c.output.dir);
    if (const toml::node* n = t->get("formats")) {
      if (const toml::array* a = n->as_array()) {
        c.output.formats.clear();
        for (const auto& e : *a) {
          if (auto s = e.value<std::string>()) {
            c.output.formats.push_back(*s);
          } else {
            issues.push_back("output.formats entries must be strings");
          }
        }
      } else {
        issues.push_back("output.formats must be an array of strings");
      }
    }
  }

  collect_issues(c, issues);
  if (issues.empty() && c.dt_defaulted) {
    try {
      const ModeTable table(c.lattice);
      const double emax = table.max_energy();
      c.dynamics.dt = emax > 0.0 ? 0.01 / emax : 0.01;
    } catch (const std::exception& e) {
      issues.push_back(std::string("lattice: ") + e.what());
    }
  }
  if (!issues.empty()) throw ConfigErrors(std::move(issues));
  c.dt_defaulted = false;
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

void validate(const RunConfig& config) {
  std::vector<std::string> issues;
  collect_issues(config, issues);
  if (!issues.empty()) throw ConfigErrors(std::move(issues));
}

KernelInit make_init(const RunConfig& c, const ModeTable& table) {
  KernelInit init;
  const std::string& kind = c.init.v0;
  if (kind == "vacuum") {
    init = KernelInit::vacuum(table);
  } else if (kind == "scaled") {
    init = KernelInit::scaled(table, Complex{c.init.scale_re, c.init.scale_im});
  } else if (kind == "zero") {
    init = KernelInit::zero(table);
  } else if (kind == "deterministic") {
    init = KernelInit::deterministic(table);
  } else {
    const auto rows = read_numeric_csv(resolve(c, c.init.v0_file), 3);
    std::vector<InitialKernel> v0(table.dof_count(), InitialKernel{});
    std::vector<bool> seen(table.dof_count(), false);
    for (const auto& r : rows) {
      const auto id = static_cast<std::size_t>(r[0]);
      if (r[0] < 0 || id >= table.size() || table.mode(id).cls == ModeClass::dependent)
        throw ConfigError("init.v0_file: mode " + std::to_string(r[0]) + " is not an independent or self-conjugate mode");
      v0[table.dof_of(id)] = InitialKernel::finite_value(Complex{r[1], r[2]});
      seen[table.dof_of(id)] = true;
    }
    for (std::size_t d = 0; d < seen.size(); ++d)
      if (!seen[d]) throw ConfigError("init.v0_file: missing mode " + std::to_string(table.dofs()[d]));
    init = KernelInit::custom(table, std::move(v0));
  }
  if (c.init.mu0 == "file") {
    const auto rows = read_numeric_csv(resolve(c, c.init.mu0_file), 5);
    for (const auto& r : rows) {
      const auto id = static_cast<std::size_t>(r[0]);
      if (r[0] < 0 || id >= table.size() || table.mode(id).cls == ModeClass::dependent)
        throw ConfigError("init.mu0_file: mode " + std::to_string(r[0]) + " is not an independent or self-conjugate mode");
      const std::size_t d = table.dof_of(id);
      init.mu0_plus[d] = {r[1], r[2]};
      init.mu0_minus[d] = {r[3], r[4]};
    }
  }
  init.validate(table);
  return init;
}

double lindblad_energy(const RunConfig& c) {
  const double e = c.lindblad.energy > 0.0 ? c.lindblad.energy : c.lattice.mass;
  if (!(e > 0.0)) throw ConfigError("lindblad: mode energy must be > 0 (set lindblad.energy or a positive lattice.mass)");
  return e;
}

}  // namespace stochfield::cli
