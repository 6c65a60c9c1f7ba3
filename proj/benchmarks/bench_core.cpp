#include <benchmark/benchmark.h>

#include <cmath>

#include "deal/envelopes.hpp"
#include "deal/oracles.hpp"
#include "deal/problems.hpp"
#include "deal/rng.hpp"
#include "deal/solvers.hpp"

using namespace deal;

static void BM_ProxL1(benchmark::State& state) {
  const Vector x = default_start(state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(prox_l1(x, 0.3));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ProxL1)->Arg(10)->Arg(1000)->Arg(100000);

static void BM_FbeValueGrad(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto gen = generate_problem(1, ProblemKind::lasso, 1000, n, {.lambda = 0.1});
  const auto comp = to_composite(std::get<LassoProblem>(gen.problem));
  const double gamma = 0.95 / comp.lipschitz();
  const Vector x = default_start(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(fbe_value_grad(comp, x, gamma));
}
BENCHMARK(BM_FbeValueGrad)->Arg(10)->Arg(200);

static void BM_ScalarMinimize(benchmark::State& state) {
  const auto g = [](double t) { return std::pow(std::abs(t), 4.0) + std::pow(std::abs(1.3 - t), 3.0) / 3.0; };
  for (auto _ : state) benchmark::DoNotOptimize(oracle::scalar_minimize(g, -10, 10));
}
BENCHMARK(BM_ScalarMinimize);

static void BM_SpectralConstants(benchmark::State& state) {
  Rng rng(3);
  const Matrix A = rng.normal_matrix(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(oracle::spectral_constants(A));
}
BENCHMARK(BM_SpectralConstants)->Args({200, 50})->Args({1000, 200})->Unit(benchmark::kMillisecond);

static void BM_DealcLeastP(benchmark::State& state) {
  auto gen = generate_problem(4, ProblemKind::leastp, 200, 50, {.p = 1.5, .consistent = true});
  const auto obj = to_objective(std::get<LeastPProblem>(gen.problem));
  DealConfig cfg;
  cfg.max_iter = 500;
  const Vector x0 = default_start(50, 1);
  for (auto _ : state) benchmark::DoNotOptimize(run_dealc(obj, x0, cfg));
}
BENCHMARK(BM_DealcLeastP)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
