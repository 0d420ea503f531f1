#include "stochfield_cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stochfield/classical.hpp"
#include "stochfield/ensemble.hpp"
#include "stochfield/error.hpp"
#include "stochfield/kernel.hpp"
#include "stochfield/lindblad.hpp"
#include "stochfield/observables.hpp"
#include "stochfield/verify/battery.hpp"
#include "stochfield_cli/io.hpp"

#ifndef STOCHFIELD_VERSION
#define STOCHFIELD_VERSION "unknown"
#endif

namespace stochfield::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

ordered_json config_json(const RunConfig& c) {
  ordered_json j;
  j["lattice"] = {{"dim", c.lattice.dim},
                  {"sites", c.lattice.sites_per_dim},
                  {"length", c.lattice.box_length},
                  {"mass", c.lattice.mass}};
  j["dynamics"] = {{"dt", c.dynamics.dt},
                   {"t_max", c.dynamics.t_max},
                   {"lambda", c.dynamics.lambda},
                   {"scheme", to_string(c.dynamics.scheme)},
                   {"snapshot_stride", c.dynamics.snapshot_stride}};
  j["init"] = {{"v0", c.init.v0},       {"scale_re", c.init.scale_re}, {"scale_im", c.init.scale_im},
               {"v0_file", c.init.v0_file}, {"mu0", c.init.mu0},         {"mu0_file", c.init.mu0_file}};
  j["ensemble"] = {{"trajectories", c.ensemble.trajectories}, {"master_seed", c.ensemble.master_seed}};
  j["lindblad"] = {{"n_max", c.lindblad.n_max},
                   {"enabled", c.lindblad.enabled},
                   {"energy", c.lindblad.energy},
                   {"dt", c.lindblad.dt}};
  j["output"] = {{"dir", c.output.dir}, {"formats", c.output.formats}};
  return j;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Collects output files and writes manifest.json last.
class Run {
 public:
  Run(std::string command, const RunConfig& config, const fs::path& dir)
      : command_(std::move(command)), config_(config), dir_(dir), started_(utc_now()),
        t0_(std::chrono::steady_clock::now()) {
    fs::create_directories(dir_);
  }

  fs::path file(const std::string& name) {
    files_.push_back(name);
    return dir_ / name;
  }

  void finish(ordered_json extra = ordered_json::object()) {
    ordered_json m;
    m["tool"] = "stochfield";
    m["version"] = STOCHFIELD_VERSION;
    m["command"] = command_;
    m["status"] = "complete";
    m["master_seed"] = config_.ensemble.master_seed;
    for (auto& [k, v] : extra.items()) m[k] = v;
    m["config"] = config_json(config_);
    m["started_utc"] = started_;
    m["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    ordered_json files = ordered_json::array();
    for (const auto& f : files_) {
      files.push_back({{"name", f}, {"bytes", fs::file_size(dir_ / f)}, {"sha256", sha256_file(dir_ / f)}});
    }
    m["files"] = files;
    write_file_atomic(dir_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  std::string command_;
  const RunConfig& config_;
  fs::path dir_;
  std::vector<std::string> files_;
  std::string started_;
  std::chrono::steady_clock::time_point t0_;
};

void log(const CommandOptions& opt, const std::string& msg) {
  if (!opt.quiet) std::cerr << msg << '\n';
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

fs::path out_dir(const RunConfig& c, const CommandOptions& opt) {
  return opt.out_dir.empty() ? fs::path(c.output.dir) : fs::path(opt.out_dir);
}

void write_lindblad_csv(const fs::path& path, const LindbladResult& res) {
  CsvWriter w(path, {"t", "energy", "x_mean", "x2_mean", "trace_err", "min_eig"});
  for (const auto& s : res.series) {
    w.add(s.t).add(s.energy).add(s.x_mean).add(s.x2_mean).add(s.trace_err).add(s.min_eig);
    w.end_row();
  }
  w.close();
}

LindbladResult run_lindblad(const RunConfig& c, const CommandOptions& opt) {
  const double e = lindblad_energy(c);
  LindbladOptions lo;
  lo.dt = c.lindblad.dt > 0.0 ? c.lindblad.dt : c.dynamics.dt;
  lo.t_max = c.dynamics.t_max;
  lo.stride = c.dynamics.snapshot_stride;
  const LindbladResult res =
      integrate(DensityMatrix::vacuum(e, c.lindblad.n_max), SingleModeGenerator::make(e, c.dynamics.lambda, c.lindblad.n_max), lo);
  if (res.stiffness_warning)
    warn("lindblad: dt*(n_max*E + lambda^2*n_max/E) exceeds 0.5; results may be inaccurate");
  if (res.n_max_used != c.lindblad.n_max)
    log(opt, "lindblad: truncation raised to n_max=" + std::to_string(res.n_max_used));
  return res;
}

ordered_json rate_json(const EnergyRateReport& r) {
  return {{"observable", r.observable},   {"slope", r.slope},         {"stderr", r.slope_stderr},
          {"expected_slope", r.expected_slope}, {"z_score", r.z_score}, {"intercept", r.intercept},
          {"r2", r.r2},                   {"trajectories", r.trajectories}};
}

}  // namespace

RunConfig effective_config(const CommandOptions& opt) {
  RunConfig c = opt.config_path.empty() ? parse_config("") : load_config(opt.config_path);
  if (opt.seed) c.ensemble.master_seed = *opt.seed;
  if (opt.trajectories) c.ensemble.trajectories = *opt.trajectories;
  if (!opt.out_dir.empty()) c.output.dir = opt.out_dir;
  validate(c);
  return c;
}

int cmd_simulate(const RunConfig& c, const CommandOptions& opt) {
  const ModeTable table(c.lattice);
  const KernelInit init = make_init(c, table);
  DynamicsConfig dyn = c.dynamics;
  dyn.validate();

  std::unique_ptr<NoiseSource> noise;
  NoiseDump replayed;
  const StreamSpec stream{c.ensemble.master_seed, opt.trajectory_id};
  if (!opt.replay.empty()) {
    replayed = read_noise(opt.replay);
    if (replayed.lattice.dim != c.lattice.dim || replayed.lattice.sites_per_dim != c.lattice.sites_per_dim ||
        replayed.lattice.box_length != c.lattice.box_length || replayed.lattice.mass != c.lattice.mass)
      throw ConfigError("replay: noise file lattice differs from the config");
    if (replayed.dt != dyn.dt) throw ConfigError("replay: noise file dt differs from dynamics.dt");
    if (replayed.slices.size() < dyn.step_count())
      throw ConfigError("replay: noise file holds " + std::to_string(replayed.slices.size()) + " slices, run needs " +
                        std::to_string(dyn.step_count()));
    noise = std::make_unique<RecordedNoise>(replayed.slices);
  } else {
    noise = std::make_unique<StreamNoise>(table, dyn.dt, stream);
  }

  const bool normalizable = init.normalizable();
  const bool compare = normalizable && init.mu0_is_zero();
  if (!normalizable) warn("initial kernel is not normalizable; observables, fields and comparison are skipped");

  Run run("simulate", c, out_dir(c, opt));
  write_modes_csv(run.file("modes.csv"), table);
  CsvWriter snaps(run.file("snapshots.csv"),
                  {"t", "mode_id", "V_re", "V_im", "mu_plus_re", "mu_plus_im", "mu_minus_re", "mu_minus_im"});
  std::optional<CsvWriter> obs, fields;
  if (normalizable) {
    obs.emplace(run.file("observables.csv"), std::vector<std::string>{"t", "E0", "E1", "E_total", "E_density"});
    fields.emplace(run.file("fields.csv"), std::vector<std::string>{"t", "mode_id", "phi_q_re", "phi_q_im", "variance"});
  }
  CsvWriter classical(run.file("classical.csv"), {"t", "mode_id", "phi_re", "phi_im", "pi_re", "pi_im"});

  const bool keep_noise = c.output.wants("noise_bin") || c.output.wants("noise_csv");
  NoiseDump dump;
  dump.lattice = c.lattice;
  dump.dt = dyn.dt;
  dump.master_seed = opt.replay.empty() ? c.ensemble.master_seed : replayed.master_seed;
  dump.trajectory_id = opt.replay.empty() ? opt.trajectory_id : replayed.trajectory_id;
  for (std::size_t id : table.dofs()) dump.dof_modes.push_back(static_cast<std::uint32_t>(id));

  const KernelEngine engine(table, init, dyn);
  KernelState q = engine.initial();
  ClassicalState cl = classical_rest_state(table);
  NoiseSlice slice;
  double max_disc = 0.0, scale = 0.0, t_at = 0.0;
  std::size_t mode_at = 0;
  const double e0 = normalizable ? energy_free(table, init) : 0.0;
  const std::uint64_t steps = engine.step_count();
  for (std::uint64_t s = 0;; ++s) {
    const double t = static_cast<double>(s) * dyn.dt;
    if (compare && s > 0) {
      for (std::size_t d = 0; d < table.dof_count(); ++d) {
        const Complex phi = field_expectation(table, q, d);
        const double diff = std::abs(phi - cl.dofs[d].phi);
        scale = std::max(scale, std::abs(cl.dofs[d].phi));
        if (diff > max_disc) {
          max_disc = diff;
          t_at = t;
          mode_at = table.dofs()[d];
        }
      }
    }
    if (dyn.is_snapshot(s)) {
      for (std::size_t d = 0; d < table.dof_count(); ++d) {
        const auto& k = q.dofs[d];
        snaps.add(t).add(static_cast<std::uint64_t>(table.dofs()[d])).add(k.v.real()).add(k.v.imag());
        snaps.add(k.mu_plus.real()).add(k.mu_plus.imag()).add(k.mu_minus.real()).add(k.mu_minus.imag());
        snaps.end_row();
        const auto& cd = cl.dofs[d];
        classical.add(t).add(static_cast<std::uint64_t>(table.dofs()[d]));
        classical.add(cd.phi.real()).add(cd.phi.imag()).add(cd.pi.real()).add(cd.pi.imag());
        classical.end_row();
      }
      if (normalizable) {
        const double e1 = energy_noise(table, q);
        obs->add(t).add(e0).add(e1).add(e0 + e1).add((e0 + e1) / c.lattice.volume());
        obs->end_row();
        for (std::size_t d = 0; d < table.dof_count(); ++d) {
          const Complex phi = field_expectation(table, q, d);
          fields->add(t).add(static_cast<std::uint64_t>(table.dofs()[d])).add(phi.real()).add(phi.imag());
          fields->add(field_variance(table, q, d));
          fields->end_row();
        }
      }
    }
    if (s == steps) break;
    noise->fill(s, slice);
    if (keep_noise) dump.slices.push_back(slice);
    engine.step(q, slice);
    cl = dyn.scheme == Scheme::exact ? classical_step_exact(table, cl, slice, dyn.lambda)
                                     : classical_step_em(table, cl, slice, dyn.lambda);
  }
  snaps.close();
  classical.close();
  if (obs) obs->close();
  if (fields) fields->close();

  if (compare) {
    ordered_json cmp{{"max_discrepancy", max_disc},
                     {"relative", scale > 0.0 ? max_disc / scale : 0.0},
                     {"scale", scale},
                     {"argmax", {{"t", t_at}, {"mode_id", mode_at}}},
                     {"scheme", to_string(dyn.scheme)}};
    write_file_atomic(run.file("compare.json"), cmp.dump(2) + "\n");
  }
  if (c.output.wants("noise_bin")) write_noise_bin(run.file("noise.bin"), dump);
  if (c.output.wants("noise_csv")) write_noise_csv(run.file("noise.csv"), dump);

  ordered_json extra{{"trajectory_id", dump.trajectory_id}, {"steps", steps}};
  if (!opt.replay.empty()) extra["replay"] = opt.replay;
  run.finish(extra);
  log(opt, "simulate: " + std::to_string(steps) + " steps, output in " + out_dir(c, opt).string());
  return kExitOk;
}

int cmd_ensemble(const RunConfig& c, const CommandOptions& opt) {
  const ModeTable table(c.lattice);
  const KernelInit init = make_init(c, table);
  EnsembleOptions eo;
  eo.master_seed = c.ensemble.master_seed;
  eo.trajectories = c.ensemble.trajectories;
  eo.track_classical = true;
  const EnsembleStats st = run_ensemble(table, init, c.dynamics, eo);

  Run run("ensemble", c, out_dir(c, opt));
  write_modes_csv(run.file("modes.csv"), table);
  CsvWriter w(run.file("ensemble.csv"), {"t", "observable", "mean", "stderr", "M"});
  for (std::size_t ti = 0; ti < st.times.size(); ++ti) {
    for (std::size_t k = 0; k < st.names.size(); ++k) {
      const Moments& m = st.series[ti * st.names.size() + k];
      w.add(st.times[ti]).add(std::string_view(st.names[k])).add(m.mean).add(m.stderr_mean()).add(m.count);
      w.end_row();
    }
  }
  w.close();

  if (st.times.size() >= 3) {
    const EnergyRateReport total = energy_rate(st, table, c.dynamics.lambda, "E_total");
    ordered_json fit = rate_json(total);
    fit["fits"] = ordered_json::array({rate_json(energy_rate(st, table, c.dynamics.lambda, "E1")),
                                       rate_json(energy_rate(st, table, c.dynamics.lambda, "E_classical"))});
    write_file_atomic(run.file("fit.json"), fit.dump(2) + "\n");
    log(opt, "ensemble: E_total slope " + format_double(total.slope) + " +- " + format_double(total.slope_stderr) +
                 " (expected " + format_double(total.expected_slope) + ", z = " + format_double(total.z_score) + ")");
  } else {
    warn("fewer than 3 snapshot times; no slope fit written");
  }
  if (c.lindblad.enabled) write_lindblad_csv(run.file("lindblad.csv"), run_lindblad(c, opt));
  run.finish({{"trajectories", c.ensemble.trajectories}});
  return kExitOk;
}

int cmd_lindblad(const RunConfig& c, const CommandOptions& opt) {
  const LindbladResult res = run_lindblad(c, opt);
  Run run("lindblad", c, out_dir(c, opt));
  write_lindblad_csv(run.file("lindblad.csv"), res);
  run.finish({{"n_max_used", res.n_max_used}, {"top_population", res.top_population}});
  log(opt, "lindblad: " + std::to_string(res.series.size()) + " samples, final energy " +
               format_double(res.series.back().energy));
  return kExitOk;
}

int cmd_verify(const CommandOptions& opt) {
  verify::BatteryOptions bo;
  if (opt.seed) bo.master_seed = *opt.seed;
  bo.only = opt.only;
  int failed = 0;
  verify::run_battery(bo, [&](const verify::CriterionResult& r) {
    std::cout << verify::format_result(r) << std::endl;
    if (!r.passed) ++failed;
  });
  std::cout << (failed ? "FAILED: " : "OK: ") << failed << " criteria failed" << std::endl;
  return failed ? kExitVerification : kExitOk;
}

int cmd_export(const CommandOptions& opt) {
  if (opt.input.empty() || opt.output.empty()) throw ConfigError("export needs --input and --output");
  write_noise(opt.output, read_noise(opt.input));
  return kExitOk;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Stochastic scalar field simulator on a momentum lattice"};
  app.set_version_flag("--version", STOCHFIELD_VERSION);
  app.require_subcommand(1);
  CommandOptions opt;
  std::uint64_t seed = 0, traj = 0;

  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", opt.config_path, "TOML configuration file");
    if (needs_config) c->required();
    sub->add_option("--out", opt.out_dir, "Output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "Master seed (overrides ensemble.master_seed)");
    sub->add_option("--trajectories", traj, "Trajectory count (overrides ensemble.trajectories)");
    sub->add_flag("--quiet", opt.quiet, "Suppress progress messages");
  };
  auto* sim = app.add_subcommand("simulate", "Integrate one trajectory and write all per-trajectory CSVs");
  common(sim, true);
  sim->add_option("--trajectory", opt.trajectory_id, "Trajectory id within the master seed's family");
  sim->add_option("--replay", opt.replay, "Replay a recorded noise file (.bin or .csv)");
  auto* ens = app.add_subcommand("ensemble", "Run an ensemble and fit the energy production rate");
  common(ens, true);
  auto* lin = app.add_subcommand("lindblad", "Integrate the single-mode master equation");
  common(lin, true);
  auto* ver = app.add_subcommand("verify", "Run the acceptance battery");
  common(ver, false);
  ver->add_option("--only", opt.only, "Criterion ids to run")->delimiter(',');
  auto* exp = app.add_subcommand("export", "Convert a noise dump between .bin and .csv");
  exp->add_option("--input", opt.input, "Source noise file")->required();
  exp->add_option("--output", opt.output, "Destination noise file")->required();
  exp->add_option("--config", opt.config_path, "Ignored; accepted for symmetry");
  exp->add_flag("--quiet", opt.quiet, "Suppress progress messages");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  for (CLI::App* sub : {sim, ens, lin, ver}) {
    if (sub->parsed()) {
      if (sub->count("--seed")) opt.seed = seed;
      if (sub->count("--trajectories")) opt.trajectories = traj;
    }
  }

  try {
    if (exp->parsed()) return cmd_export(opt);
    if (ver->parsed()) {
      // The battery carries its own parameters; a given config is only checked.
      if (!opt.config_path.empty()) (void)effective_config(opt);
      return cmd_verify(opt);
    }
    const RunConfig c = effective_config(opt);
    if (sim->parsed()) return cmd_simulate(c, opt);
    if (ens->parsed()) return cmd_ensemble(c, opt);
    return cmd_lindblad(c, opt);
  } catch (const ConfigErrors& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace stochfield::cli
