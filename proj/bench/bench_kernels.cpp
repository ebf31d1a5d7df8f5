// Serial reference loops against the OpenMP kernels on the positive suite
// system. Both variants produce bit-identical output; only wall time differs.

#include "gsde/compare.hpp"
#include "gsde/gexpect.hpp"
#include "gsde/sim.hpp"

#include <benchmark/benchmark.h>

using namespace gsde;

namespace {

constexpr double kDt = 1.0 / 1024;

CoupledSystem positive_system() {
  const CoefficientSet x = CoefficientSet::parse(
      1, 1, 0.25,
      CoefficientTexts{{"-x[1](0) + 0.5*x[1](-0.25)"}, {"0.1*tanh(x[1](-0.25))"}, {"0.5 + 0.2*sin(x[1](0))"}});
  return CoupledSystem{x, x, SegmentPath::constant(0.25, 1, kDt, std::vector<double>{0.0}),
                       SegmentPath::constant(0.25, 1, kDt, std::vector<double>{0.5})};
}

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

void BM_SimulatePair(benchmark::State& state) {
  const CoupledSystem sys = positive_system();
  const VolBounds b(1.0, 2.0, 1);
  const auto pol = VolatilityPolicy::feedback(1, 0.0, SymMatrix::identity(1, 1.0), SymMatrix::identity(1, 4.0), b);
  const DriverBatch batch = drive(pol, TimeGrid(0.0, 1.0, kDt), static_cast<std::size_t>(state.range(1)), 1);
  for (auto _ : state) {
    TrajectoryPair tr = simulate_pair(sys, batch, exec_of(state));
    benchmark::DoNotOptimize(tr.history(Which::x, 0).data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_EvaluatePaths(benchmark::State& state) {
  const VolBounds b(1.0, 2.0, 1);
  const TimeGrid grid(0.0, 1.0, kDt);
  const auto pols = standard_policies(b, grid);
  const MonteCarloSetup setup{grid, static_cast<std::size_t>(state.range(1)), 1, positive_system(), exec_of(state)};
  const PathFunctional fs[] = {violation_functional};
  for (auto _ : state) {
    PathValues v = evaluate_paths(fs, pols, setup);
    benchmark::DoNotOptimize(v.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1) * static_cast<std::int64_t>(pols.size()));
}

void BM_CheckCondition1(benchmark::State& state) {
  const CoupledSystem sys = positive_system();
  const VolBounds b(1.0, 2.0, 1);
  const std::vector<double> t_grid = {0.0, 0.5, 1.0};
  ProbeOptions opts;
  opts.n_trials = static_cast<std::size_t>(state.range(1));
  opts.exec = exec_of(state);
  for (auto _ : state) {
    ConditionReport r = check_condition1(sys.x, sys.xbar, b, t_grid, opts);
    benchmark::DoNotOptimize(r.max_margin);
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

}  // namespace

// Arguments: {0 = serial, 1 = OpenMP}, batch size.
BENCHMARK(BM_SimulatePair)->ArgsProduct({{0, 1}, {256, 2048}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluatePaths)->ArgsProduct({{0, 1}, {256}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CheckCondition1)->ArgsProduct({{0, 1}, {10000}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
