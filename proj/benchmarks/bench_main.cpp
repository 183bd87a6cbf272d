#include <benchmark/benchmark.h>

#include <vector>

#include "bohmlab/measurement.hpp"
#include "bohmlab/propagator.hpp"
#include "bohmlab/states.hpp"
#include "bohmlab/trajectories.hpp"
#include "bohmlab/velocity.hpp"

namespace {

using namespace bohmlab;

Grid line_grid(std::size_t n) { return Grid({AxisSpec{-20.0, 20.0, n}}); }

WaveFunction packet(const Grid& g) {
  states::GaussianSpec spec;
  spec.center = {1.0};
  spec.sigma = {1.0};
  spec.kick = {0.5};
  return states::gaussian(g, spec);
}

void bm_propagator_step(benchmark::State& state) {
  const Grid g = line_grid(static_cast<std::size_t>(state.range(0)));
  const Hamiltonian h{{1.0}, 1.0, Potential::harmonic(1.0)};
  const Propagator prop(g, h, PropagatorConfig{1e-3});
  WaveFunction psi = packet(g);
  std::vector<cplx> scratch(g.size());
  for (auto _ : state) {
    prop.step(psi.amplitudes, scratch);
    benchmark::DoNotOptimize(psi.amplitudes.data());
  }
}
BENCHMARK(bm_propagator_step)->Arg(256)->Arg(1024)->Arg(4096);

void bm_velocity_field(benchmark::State& state) {
  const Grid g = line_grid(static_cast<std::size_t>(state.range(0)));
  const Hamiltonian h{{1.0}, 1.0, Potential::free_space()};
  const WaveFunction psi = packet(g);
  for (auto _ : state) {
    const VelocityField f = velocity_field(psi, h);
    benchmark::DoNotOptimize(f.components[0].data());
  }
}
BENCHMARK(bm_velocity_field)->Arg(256)->Arg(1024);

void bm_weak_run_free(benchmark::State& state) {
  const Grid g = line_grid(256);
  const Hamiltonian h{{1.0}, 1.0, Potential::free_space()};
  const WaveFunction psi = packet(g);
  const PointerModel pointer{10.0, Representation::position};
  EnsembleConfig cfg;
  cfg.tau = 0.02;
  cfg.runs = 1;
  cfg.seed = 7;
  cfg.propagation = PropagatorConfig{2e-3};
  std::uint32_t run = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_run(psi, h, pointer, cfg, run++));
  }
}
BENCHMARK(bm_weak_run_free);

void bm_weak_ensemble_harmonic(benchmark::State& state) {
  const Grid g = line_grid(256);
  const Hamiltonian h{{1.0}, 1.0, Potential::harmonic(1.0)};
  const WaveFunction psi = packet(g);
  const PointerModel pointer{10.0, Representation::position};
  EnsembleConfig cfg;
  cfg.tau = 0.02;
  cfg.runs = static_cast<std::size_t>(state.range(0));
  cfg.seed = 7;
  cfg.propagation = PropagatorConfig{2e-3};
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_ensemble(psi, h, pointer, cfg).records.size());
  }
}
BENCHMARK(bm_weak_ensemble_harmonic)->Arg(256)->Unit(benchmark::kMillisecond);

void bm_integrate(benchmark::State& state) {
  const Grid g = line_grid(256);
  const Hamiltonian h{{1.0}, 1.0, Potential::free_space()};
  WaveFunction psi = packet(g);
  std::vector<WaveFunction> snaps;
  const Propagator prop(g, h, PropagatorConfig{1e-3});
  std::vector<cplx> scratch(g.size());
  for (int k = 0; k < 6; ++k) {
    snaps.push_back(psi);
    for (int s = 0; s < 100; ++s) prop.step(psi.amplitudes, scratch);
    psi.time += 0.1;
  }
  const FieldStack stack = analytic_field_stack(snaps, h, Representation::position);
  const std::vector<double> x0 = sample_density(position_density(snaps.front()),
                                                static_cast<std::size_t>(state.range(0)), 11);
  IntegrateOptions opt;
  opt.dt_path = 0.025;
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrate(x0, stack, opt).positions.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_integrate)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
