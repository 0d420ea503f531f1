#include "stochfield/ensemble.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "stochfield/classical.hpp"
#include "stochfield/error.hpp"
#include "stochfield/noise.hpp"
#include "stochfield/observables.hpp"

namespace stochfield {

namespace {

constexpr std::uint64_t kChunk = 64;

struct Layout {
  std::vector<std::string> names;
  std::vector<std::string> scalar_names;
  std::size_t per_dof_offset = 0;
  bool classical = false;
  bool modes = false;
};

Layout make_layout(const ModeTable& table, const EnsembleOptions& opt) {
  Layout l;
  l.classical = opt.track_classical;
  l.modes = opt.track_modes;
  l.names = {"E1", "E_total", "E_density"};
  if (l.classical) l.names.emplace_back("E_classical");
  l.per_dof_offset = l.names.size();
  if (l.modes) {
    static const char* per_dof[] = {"E_mode", "mu_abs2", "mu_pm_re", "mu_pm_im", "phi_re", "phi_im", "phi_abs2"};
    for (const char* base : per_dof)
      for (std::size_t d = 0; d < table.dof_count(); ++d) l.names.push_back(std::string(base) + "[" + std::to_string(table.dofs()[d]) + "]");
  }
  l.scalar_names = {"E1_slope", "E_total_slope"};
  if (l.classical) l.scalar_names.emplace_back("E_classical_slope");
  return l;
}

std::vector<double> snapshot_times(const DynamicsConfig& dyn) {
  std::vector<double> t;
  const std::uint64_t steps = dyn.step_count();
  for (std::uint64_t s = 0; s <= steps; ++s)
    if (dyn.is_snapshot(s)) t.push_back(static_cast<double>(s) * dyn.dt);
  return t;
}

EnsembleStats empty_stats(const Layout& l, const std::vector<double>& times) {
  EnsembleStats st;
  st.times = times;
  st.names = l.names;
  st.series.assign(times.size() * l.names.size(), Moments{});
  st.scalar_names = l.scalar_names;
  st.scalars.assign(l.scalar_names.size(), Moments{});
  return st;
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double xm = 0, ym = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xm += x[i];
    ym += y[i];
  }
  xm /= static_cast<double>(x.size());
  ym /= static_cast<double>(x.size());
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  return sxy / sxx;
}

class Accumulator {
 public:
  Accumulator(const ModeTable& table, const KernelInit& init, const KernelEngine& engine, const Layout& layout,
              const std::vector<double>& times)
      : table_(table), init_(init), engine_(engine), layout_(layout), times_(times), row_(layout.names.size()) {
    e0_ = energy_free(table, init);
  }

  void trajectory(const StreamSpec& stream, EnsembleStats& out) {
    const DynamicsConfig& dyn = engine_.dynamics();
    StreamNoise noise(table_, dyn.dt, stream);
    KernelState q = engine_.initial();
    ClassicalState cl;
    if (layout_.classical) cl = classical_rest_state(table_);
    e1_series_.clear();
    et_series_.clear();
    ec_series_.clear();
    std::size_t ti = 0;
    const std::uint64_t steps = engine_.step_count();
    for (std::uint64_t s = 0;; ++s) {
      if (dyn.is_snapshot(s)) record(q, cl, ti++, out);
      if (s == steps) break;
      noise.fill(s, slice_);
      engine_.step(q, slice_);
      if (layout_.classical) cl = classical_step_exact(table_, cl, slice_, dyn.lambda);
    }
    if (times_.size() >= 2) {
      out.scalars[0].push(ols_slope(times_, e1_series_));
      out.scalars[1].push(ols_slope(times_, et_series_));
      if (layout_.classical) out.scalars[2].push(ols_slope(times_, ec_series_));
    }
  }

 private:
  void record(const KernelState& q, const ClassicalState& cl, std::size_t ti, EnsembleStats& out) {
    const double e1 = energy_noise(table_, q);
    const double et = e0_ + e1;
    row_[0] = e1;
    row_[1] = et;
    row_[2] = et / table_.spec().volume();
    if (layout_.classical) {
      row_[3] = classical_energy(table_, cl);
      ec_series_.push_back(row_[3]);
    }
    e1_series_.push_back(e1);
    et_series_.push_back(et);
    if (layout_.modes) {
      const std::size_t nd = table_.dof_count();
      const std::size_t o = layout_.per_dof_offset;
      for (std::size_t d = 0; d < nd; ++d) {
        const DofKernel& k = q.dofs[d];
        const Complex phi = field_expectation(table_, q, d);
        const Complex pm = k.mu_plus * k.mu_minus;
        row_[o + 0 * nd + d] = mode_energy(table_, q, d);
        row_[o + 1 * nd + d] = std::norm(k.mu_plus);
        row_[o + 2 * nd + d] = pm.real();
        row_[o + 3 * nd + d] = pm.imag();
        row_[o + 4 * nd + d] = phi.real();
        row_[o + 5 * nd + d] = phi.imag();
        row_[o + 6 * nd + d] = std::norm(phi);
      }
    }
    Moments* base = &out.series[ti * row_.size()];
    for (std::size_t i = 0; i < row_.size(); ++i) {
      if (!std::isfinite(row_[i])) throw NumericalError("non-finite observable " + layout_.names[i]);
      base[i].push(row_[i]);
    }
  }

  const ModeTable& table_;
  const KernelInit& init_;
  const KernelEngine& engine_;
  const Layout& layout_;
  const std::vector<double>& times_;
  std::vector<double> row_;
  std::vector<double> e1_series_, et_series_, ec_series_;
  NoiseSlice slice_;
  double e0_ = 0.0;
};

}  // namespace

std::uint64_t EnsembleStats::count() const { return series.empty() ? 0 : series.front().count; }

std::size_t EnsembleStats::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  throw std::out_of_range("ensemble: unknown observable " + name);
}

bool EnsembleStats::has(const std::string& name) const {
  for (const auto& n : names)
    if (n == name) return true;
  return false;
}

const Moments& EnsembleStats::at(std::size_t time_index, const std::string& name) const {
  return series.at(time_index * names.size() + index_of(name));
}

const Moments& EnsembleStats::scalar(const std::string& name) const {
  for (std::size_t i = 0; i < scalar_names.size(); ++i)
    if (scalar_names[i] == name) return scalars[i];
  throw std::out_of_range("ensemble: unknown scalar " + name);
}

std::vector<double> EnsembleStats::means(const std::string& name) const {
  const std::size_t k = index_of(name);
  std::vector<double> out(times.size());
  for (std::size_t t = 0; t < times.size(); ++t) out[t] = series[t * names.size() + k].mean;
  return out;
}

std::vector<double> EnsembleStats::stderrs(const std::string& name) const {
  const std::size_t k = index_of(name);
  std::vector<double> out(times.size());
  for (std::size_t t = 0; t < times.size(); ++t) out[t] = series[t * names.size() + k].stderr_mean();
  return out;
}

void EnsembleStats::merge(const EnsembleStats& other) {
  if (other.names != names || other.times.size() != times.size() || other.scalar_names != scalar_names)
    throw std::invalid_argument("ensemble: cannot merge statistics of different shape");
  for (std::size_t i = 0; i < series.size(); ++i) series[i].merge(other.series[i]);
  for (std::size_t i = 0; i < scalars.size(); ++i) scalars[i].merge(other.scalars[i]);
}

unsigned default_worker_count() {
  if (const char* env = std::getenv("STOCHFIELD_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

EnsembleStats run_ensemble(const ModeTable& table, const KernelInit& init, const DynamicsConfig& dynamics,
                           const EnsembleOptions& options) {
  if (options.trajectories < 2) throw ConfigError("ensemble: trajectories must be >= 2");
  dynamics.validate();
  init.validate(table);
  if (!init.normalizable()) throw ConfigError("ensemble: observables need a normalizable initial kernel (Re V0 > 0)");

  const Layout layout = make_layout(table, options);
  const std::vector<double> times = snapshot_times(dynamics);
  const KernelEngine engine(table, init, dynamics);

  const std::uint64_t first = options.first_trajectory;
  const std::uint64_t last = first + options.trajectories;
  // Chunk boundaries are aligned to absolute trajectory ids so that split runs
  // share them with the combined run.
  const std::uint64_t chunk_lo = first / kChunk;
  const std::uint64_t chunk_hi = (last + kChunk - 1) / kChunk;
  const std::size_t n_chunks = static_cast<std::size_t>(chunk_hi - chunk_lo);

  std::vector<std::optional<EnsembleStats>> partial(n_chunks);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::uint64_t first_error_id = UINT64_MAX;
  std::string first_error_msg;

  auto worker = [&]() {
    Accumulator acc(table, init, engine, layout, times);
    for (;;) {
      if (abort.load()) return;
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      const std::uint64_t lo = std::max(first, (chunk_lo + c) * kChunk);
      const std::uint64_t hi = std::min(last, (chunk_lo + c + 1) * kChunk);
      EnsembleStats st = empty_stats(layout, times);
      for (std::uint64_t id = lo; id < hi; ++id) {
        try {
          acc.trajectory(StreamSpec{options.master_seed, id}, st);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (id < first_error_id) {
            first_error_id = id;
            first_error = std::current_exception();
            first_error_msg = e.what();
          }
          abort.store(true);
          return;
        }
      }
      partial[c] = std::move(st);
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers ? options.workers : default_worker_count(),
                                                           static_cast<unsigned>(n_chunks)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (first_error) {
    std::ostringstream msg;
    msg << "trajectory " << first_error_id << " failed: " << first_error_msg;
    try {
      std::rethrow_exception(first_error);
    } catch (const ConfigError&) {
      throw ConfigError(msg.str());
    } catch (const NumericalError&) {
      throw NumericalError(msg.str());
    } catch (...) {
      throw std::runtime_error(msg.str());
    }
  }

  EnsembleStats total = empty_stats(layout, times);
  for (auto& p : partial) total.merge(*p);
  return total;
}

EnergyRateReport energy_rate(const EnsembleStats& stats, const ModeTable& table, double lambda,
                             const std::string& observable) {
  EnergyRateReport r;
  r.observable = observable;
  const std::vector<double> y = stats.means(observable);
  const SlopeFit fit = fit_linear(stats.times, y);
  const Moments& per_traj = stats.scalar(observable + "_slope");
  r.slope = fit.slope;
  r.intercept = fit.intercept;
  r.r2 = fit.r2;
  r.slope_stderr = per_traj.stderr_mean();
  r.trajectories = per_traj.count;
  r.expected_slope = 0.5 * lambda * lambda * static_cast<double>(table.size());
  const double diff = r.slope - r.expected_slope;
  r.z_score = r.slope_stderr > 0.0 ? diff / r.slope_stderr : (diff == 0.0 ? 0.0 : INFINITY);
  return r;
}

}  // namespace stochfield
