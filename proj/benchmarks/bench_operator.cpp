#include <cmath>

#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "defhom/solver.hpp"

using namespace defhom;

namespace {

struct Setup {
  ProblemInstance inst;
  MeshPtr mesh;
  GridFunction u0;

  explicit Setup(std::size_t n, double eps = 0.03125) {
    Config cfg = bench_config("cubic");
    inst = cfg.instance(eps);
    mesh = instance_mesh(inst, n);
    u0 = solve_homogenized(inst, mesh).solution;
  }
};

void BM_ApplyF(benchmark::State& state) {
  Setup s(static_cast<std::size_t>(state.range(0)));
  FixedPointMap map = FixedPointMap::for_eps(s.inst, s.mesh);
  for (auto _ : state) benchmark::DoNotOptimize(map.apply(s.u0));
  state.SetComplexityN(state.range(0));
}

void BM_DerivativeMatrix(benchmark::State& state) {
  Setup s(static_cast<std::size_t>(state.range(0)));
  FixedPointMap map = FixedPointMap::for_eps(s.inst, s.mesh);
  for (auto _ : state) benchmark::DoNotOptimize(map.derivative_matrix(s.u0));
  state.SetComplexityN(state.range(0));
}

void BM_AssembleWithAlpha(benchmark::State& state) {
  Setup s(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_Fprime(s.inst, s.u0, false, true).alpha());
}

void BM_SolveEps(benchmark::State& state) {
  Setup s(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_eps(s.inst, s.u0).iterations);
}

void BM_SolveHomogenized(benchmark::State& state) {
  Setup s(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_homogenized(s.inst, s.mesh).iterations);
}

}  // namespace

BENCHMARK(BM_ApplyF)->RangeMultiplier(2)->Range(128, 2048)->Complexity()->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DerivativeMatrix)->RangeMultiplier(2)->Range(128, 1024)->Complexity()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssembleWithAlpha)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveEps)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveHomogenized)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);
