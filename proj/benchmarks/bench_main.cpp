#include <benchmark/benchmark.h>

#include "semidiag/counterex.hpp"
#include "semidiag/exactdiag.hpp"
#include "semidiag/manifold.hpp"
#include "semidiag/oscint.hpp"
#include "semidiag/repeated.hpp"

using namespace semidiag;

namespace {

exactdiag::AnalyticBlockSystem coupled(bool decaying) {
  auto a = MatrixFunction::from_callable("a", 2, [](cplx x, double) {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
    return m;
  });
  auto th = MatrixFunction::from_callable("theta", 2, [decaying](cplx x, double) {
    Mat m = Mat::Zero(2, 2);
    m(0, 1) = decaying ? std::exp(-x) : cplx(1.0);
    m(1, 0) = 0.5 * (decaying ? std::exp(-2.0 * x) : cplx(1.0));
    return m;
  });
  return {a, th, 1, 1};
}

void BM_SaddleQuadrature(benchmark::State& st) {
  const double h = 1.0 / static_cast<double>(st.range(0));
  const Symbol one = Symbol::constant(1.0);
  const auto phi = oscint::quadratic_phase();
  for (auto _ : st) benchmark::DoNotOptimize(oscint::saddle_deformed_quad(one, phi, 2.0, h).value);
}
BENCHMARK(BM_SaddleQuadrature)->Arg(5)->Arg(20)->Arg(80);

void BM_GevreyHalfline(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(oscint::gevrey_halfline_integral(1.0, 0.0125));
}
BENCHMARK(BM_GevreyHalfline);

void BM_FiniteConjugator(benchmark::State& st) {
  const auto sys = coupled(false);
  const double h = 1.0 / static_cast<double>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(exactdiag::solve_finite(sys, 0.0, h, {}).certificate);
}
BENCHMARK(BM_FiniteConjugator)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_InfinityConjugator(benchmark::State& st) {
  const auto sys = coupled(true);
  for (auto _ : st) benchmark::DoNotOptimize(exactdiag::solve_infinity(sys, 0.05, {}).certificate);
}
BENCHMARK(BM_InfinityConjugator)->Unit(benchmark::kMillisecond);

void BM_RepeatedStudy(benchmark::State& st) {
  auto f = MatrixFunction::from_callable("xdep", 2, [](cplx x, double h) {
    Mat m(2, 2);
    m << 1.0 + x * x, h, h, -1.0;
    return m;
  });
  auto make = [&](double h) { return SampledBlockSystem::from_matrix(f, 1, 1, h, Grid::uniform(0.0, 1.0)); };
  for (auto _ : st) benchmark::DoNotOptimize(repeated::study(make, {0.1, 0.05, 0.025, 0.0125}, 3).order_slopes);
}
BENCHMARK(BM_RepeatedStudy)->Unit(benchmark::kMillisecond);

void BM_CounterexampleAlpha(benchmark::State& st) {
  counterex::TriangularSystem ts;
  ts.theta = Symbol::constant(1.0);
  ts.L = 1.5;
  for (auto _ : st) benchmark::DoNotOptimize(counterex::alpha_solution(ts, 0.025).sup);
}
BENCHMARK(BM_CounterexampleAlpha)->Unit(benchmark::kMillisecond);

void BM_StableManifold(benchmark::State& st) {
  const auto f = manifold::VectorField::saddle2d();
  const auto eq = manifold::linearize(f, Vec::Zero(2));
  Vec ws(2);
  ws << 0.05, 0.0;
  for (auto _ : st) benchmark::DoNotOptimize(manifold::solve_stable_manifold(eq, f, ws).phi);
}
BENCHMARK(BM_StableManifold)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
