#include <cmath>

#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "defhom/oracle.hpp"

using namespace defhom;

namespace {

void BM_AveragingCheck(benchmark::State& state) {
  Config cfg = bench_config("cubic");
  auto mesh = std::make_shared<const Mesh>(Mesh::uniform(static_cast<std::size_t>(state.range(0))));
  auto u = GridFunction::sample(mesh, 1, [](double x) { return Vector::Constant(1, x); });
  std::vector<double> eps;
  for (int j = 3; j <= 9; ++j) eps.push_back(std::ldexp(1.0, -j));
  for (auto _ : state) benchmark::DoNotOptimize(averaging_check(cfg.A, cfg.B, eps, u, 64, cfg.seed).slope);
}

void BM_FemOracle(benchmark::State& state) {
  Config cfg = bench_config("cubic");
  ProblemInstance inst = cfg.instance(0.03125);
  MeshPtr base = instance_mesh(inst, 256);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_fem(inst, base, static_cast<std::size_t>(state.range(0))).iterations);
  }
}

void BM_CubicRateStudy(benchmark::State& state) {
  Config cfg = bench_config("cubic");
  StudyOptions opts = cfg.study;
  opts.n_target = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(rate_study(cfg.instance(), cfg.epsilons, opts).fitted_slope);
  }
}

}  // namespace

BENCHMARK(BM_AveragingCheck)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FemOracle)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CubicRateStudy)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond)->Iterations(1);
