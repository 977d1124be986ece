#include <benchmark/benchmark.h>

#include "spinbus/dynamics.hpp"
#include "spinbus/gates.hpp"
#include "spinbus/noise.hpp"

using namespace spinbus;

namespace {

HamiltonianParams two_pair_params() {
  HamiltonianParams p;
  p.J0 = 0.04;
  p.h = {0.35, -0.25};
  return p;
}

void BM_BuildSector(benchmark::State& state) {
  const SystemLayout l(static_cast<int>(state.range(0)), 2);
  const HamiltonianParams p = two_pair_params();
  for (auto _ : state) benchmark::DoNotOptimize(build_sector_hamiltonian(l, p, 4));
  state.counters["dim"] = static_cast<double>(binomial(l.total_sites(), 4));
}
BENCHMARK(BM_BuildSector)->Arg(6)->Arg(12)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_KrylovStep(benchmark::State& state) {
  const SystemLayout l(static_cast<int>(state.range(0)), 2);
  const SectorOperator op = build_sector_hamiltonian(l, two_pair_params(), 4);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(op.dimension());
  v[0] = 1.0;
  for (auto _ : state) {
    krylov_step(op.matrix, v, 0.25, 30, 1e-12);
    benchmark::DoNotOptimize(v.data());
  }
  state.counters["dim"] = static_cast<double>(op.dimension());
}
BENCHMARK(BM_KrylovStep)->Arg(12)->Arg(20)->Unit(benchmark::kMicrosecond);

void BM_SpectralPropagator(benchmark::State& state) {
  const SystemLayout l(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) {
    Propagator prop(build_hamiltonian(l, two_pair_params(), sector_range(l, 0, 2)), PropagatorOptions{});
    benchmark::DoNotOptimize(prop);
  }
}
BENCHMARK(BM_SpectralPropagator)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_PairChannel(benchmark::State& state) {
  const SystemLayout l(static_cast<int>(state.range(0)), 2);
  const Propagator prop(build_hamiltonian(l, two_pair_params(), channel_sectors(l, SpectatorPolicy::Plus)),
                        PropagatorOptions{});
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct_pair_channel(l, prop, ChannelOptions{}, 0, 450.0));
}
BENCHMARK(BM_PairChannel)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_DephasingStep(benchmark::State& state) {
  const SystemLayout l(6, 2);
  const HamiltonianParams p = two_pair_params();
  const Propagator prop(build_hamiltonian(l, p, sector_range(l, 0, 4)), PropagatorOptions{});
  RegisterState regs = RegisterState::all_ground(2);
  regs.a[0] = QubitState::plus();
  regs.b[1] = QubitState::plus();
  const SectorState psi = encode_product_state(l, regs);
  const DensityState rho = DensityState::outer(psi, psi);
  NoiseSpec spec;
  spec.gamma = 1e-3;
  for (auto _ : state) benchmark::DoNotOptimize(evolve_lindblad(rho, prop, spec, 5.0));
}
BENCHMARK(BM_DephasingStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
