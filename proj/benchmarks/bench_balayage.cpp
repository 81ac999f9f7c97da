#include <balayage/balayage.hpp>
#include <balayage/capacity.hpp>
#include <balayage/oracle.hpp>

#include <benchmark/benchmark.h>

using namespace balayage;

namespace {

DiscreteSpace cube(int res) { return build_grid(Box{{0, 0, 0}, {1, 1, 1}}, res); }

void BM_Assemble(benchmark::State& state) {
  const DiscreteSpace s = cube(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(assemble(KernelSpec::newtonian(3), s));
}
BENCHMARK(BM_Assemble)->Arg(6)->Arg(8)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);

void sweep_bench(benchmark::State& state, SolveMethod method) {
  const RandomInstance inst = random_grid_instance(1, static_cast<int>(state.range(0)), MaskShape::ball);
  const std::vector<double> centre{0.5, 0.5, 0.5};
  const RegionMask ball = mask_ball(inst.space, centre, 0.4);
  SolveOptions o;
  o.method = method;
  for (auto _ : state) benchmark::DoNotOptimize(sweep(inst.form, inst.mu, ball, o));
  state.counters["N"] = static_cast<double>(inst.space.size());
  state.counters["mask"] = static_cast<double>(ball.size());
}

void BM_SweepActiveSet(benchmark::State& state) { sweep_bench(state, SolveMethod::active_set); }
void BM_SweepProjectedGradient(benchmark::State& state) { sweep_bench(state, SolveMethod::projected_gradient); }
BENCHMARK(BM_SweepActiveSet)->Arg(6)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepProjectedGradient)->Arg(6)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Capacity(benchmark::State& state) {
  const RandomInstance inst = random_grid_instance(2, static_cast<int>(state.range(0)), MaskShape::box);
  for (auto _ : state) benchmark::DoNotOptimize(equilibrium(inst.form, inst.mask));
}
BENCHMARK(BM_Capacity)->Arg(6)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_BruteSweep(benchmark::State& state) {
  RandomInstanceOptions opts;
  opts.min_points = opts.max_points = state.range(0);
  const RandomInstance inst = random_instance(3, opts);
  const RegionMask all = RegionMask::full(inst.space);
  for (auto _ : state) benchmark::DoNotOptimize(brute_sweep(inst.form, inst.mu, all));
}
BENCHMARK(BM_BruteSweep)->Arg(8)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_SphereMass(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(newtonian_sphere_mass(1.0, 2.0, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_SphereMass)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
