#include <benchmark/benchmark.h>

#include "stochfield/ensemble.hpp"
#include "stochfield/kernel.hpp"
#include "stochfield/lindblad.hpp"
#include "stochfield/noise.hpp"

using namespace stochfield;

namespace {

LatticeSpec cube(int sites) {
  LatticeSpec s;
  s.dim = 3;
  s.sites_per_dim = sites;
  s.box_length = 8.0;
  s.mass = 1.0;
  return s;
}

void BM_ModeTable(benchmark::State& st) {
  const LatticeSpec spec = cube(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(ModeTable(spec));
}
BENCHMARK(BM_ModeTable)->Arg(8)->Arg(16)->Arg(32);

void BM_SampleSlice(benchmark::State& st) {
  const ModeTable t(cube(static_cast<int>(st.range(0))));
  NoiseSlice out;
  std::uint64_t k = 0;
  for (auto _ : st) {
    sample_slice_into(t, 1e-3, StreamSpec{1, 0}, k++, out);
    benchmark::DoNotOptimize(out.increments.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(t.dof_count()));
}
BENCHMARK(BM_SampleSlice)->Arg(8)->Arg(16);

void BM_KernelStep(benchmark::State& st) {
  const ModeTable t(cube(static_cast<int>(st.range(0))));
  DynamicsConfig d;
  d.dt = 1e-3;
  d.t_max = 0.1;
  const KernelEngine engine(t, KernelInit::vacuum(t), d);
  const NoiseSlice slice = sample_slice(t, d.dt, StreamSpec{1, 0}, 0);
  for (auto _ : st) {
    KernelState s = engine.initial();
    for (std::uint64_t k = 0; k < engine.step_count(); ++k) engine.step(s, slice);
    benchmark::DoNotOptimize(s.dofs.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(engine.step_count() * t.dof_count()));
}
BENCHMARK(BM_KernelStep)->Arg(8)->Arg(16);

void BM_Ensemble(benchmark::State& st) {
  LatticeSpec spec = cube(4);
  spec.dim = 1;
  spec.sites_per_dim = 8;
  const ModeTable t(spec);
  DynamicsConfig d;
  d.dt = 0.01;
  d.t_max = 2.0;
  d.snapshot_stride = 20;
  EnsembleOptions o;
  o.trajectories = static_cast<std::uint64_t>(st.range(0));
  o.workers = 1;
  for (auto _ : st) benchmark::DoNotOptimize(run_ensemble(t, KernelInit::vacuum(t), d, o));
}
BENCHMARK(BM_Ensemble)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_LindbladRhs(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto g = SingleModeGenerator::make(1.0, 0.3, n);
  const Eigen::MatrixXcd rho = DensityMatrix::coherent(1.0, n, {1.5, 0.5}).rho;
  for (auto _ : st) benchmark::DoNotOptimize(lindblad_rhs(rho, g));
}
BENCHMARK(BM_LindbladRhs)->Arg(30)->Arg(60)->Arg(120);

}  // namespace

BENCHMARK_MAIN();
