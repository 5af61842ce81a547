#include <benchmark/benchmark.h>

#include <vector>

#include "beliefsum/detector.hpp"
#include "beliefsum/rate_learner.hpp"
#include "beliefsum/simulator.hpp"
#include "beliefsum/solver.hpp"

using namespace beliefsum;

namespace {

RateLadder bench_ladder(int n) {
  std::vector<double> rates{0.001};
  for (int j = 1; j <= n; ++j) rates.push_back(5.0 * j);
  rates.push_back(5.0 * n + 40.0);
  return RateLadder::create(rates);
}

void BM_PoissonPmf(benchmark::State& state) {
  double rate = 7.3;
  int count = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(poisson_pmf(rate, count));
    count = (count + 1) % 60;
  }
}
BENCHMARK(BM_PoissonPmf);

void BM_FilterStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const RateLadder ladder = bench_ladder(n);
  const TransitionModel model = learn::default_transition(n, 1.0, 1.0);
  Belief belief = Belief::uniform_normal(n);
  int count = 0;
  for (auto _ : state) {
    belief = belief_update(belief, count, ladder, model);
    benchmark::DoNotOptimize(belief);
    count = (count + 3) % 30;
  }
}
BENCHMARK(BM_FilterStep)->Arg(1)->Arg(5)->Arg(20);

void BM_ReducedFilterStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const RateLadder ladder = bench_ladder(n);
  const TransitionModel model = learn::default_transition(n, 1.0, 1.0);
  const auto row = model.shared_row();
  ReducedBelief rb{0.01, 0.02};
  int count = 0;
  for (auto _ : state) {
    rb = reduced_update(rb, count, ladder, row, 1.0, 1.0);
    benchmark::DoNotOptimize(rb);
    count = (count + 3) % 30;
  }
}
BENCHMARK(BM_ReducedFilterStep)->Arg(1)->Arg(5)->Arg(20);

void BM_DetectorRun(benchmark::State& state) {
  detector::DetectorConfig config;
  config.ladder = learn::example_person_ladder();
  config.model = learn::default_transition(5, 1.0, 1.0);
  config.report_sum = true;
  config.prior = Belief::uniform_normal(5);
  sim::ScenarioConfig scenario;
  scenario.ladder = config.ladder;
  scenario.model = config.model;
  scenario.prior.assign(5, 0.2);
  scenario.horizon = 3000;
  scenario.seed = 1;
  const sim::SamplePath path = sim::sample_path(scenario, 0ULL);
  for (auto _ : state) {
    benchmark::DoNotOptimize(detector::run(path.counts, config));
  }
  state.SetItemsProcessed(state.iterations() * path.counts.size());
}
BENCHMARK(BM_DetectorRun);

void BM_BellmanBackup(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const solver::SimplexGrid grid(m);
  const RateLadder ladder = learn::example_person_ladder();
  const TransitionModel model = learn::default_transition(5, 1.0, 1.0);
  const solver::CostModel cost{1.0, 0.05};
  solver::ValueFunction v;
  v.values.assign(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto pt = grid.point(i);
    v.values[i] = cost.c_f * (1.0 - pt.q_low - pt.q_high);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(solver::bellman_backup(v, grid, cost, ladder, model));
  }
}
BENCHMARK(BM_BellmanBackup)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_SamplePath(benchmark::State& state) {
  sim::ScenarioConfig scenario;
  scenario.ladder = learn::example_person_ladder();
  scenario.model = learn::default_transition(5, 1.0, 1.0);
  scenario.prior.assign(5, 0.2);
  scenario.horizon = 1000;
  scenario.seed = 1;
  std::uint64_t trial = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim::sample_path(scenario, trial++));
  }
  state.SetItemsProcessed(state.iterations() * scenario.horizon);
}
BENCHMARK(BM_SamplePath);

}  // namespace

BENCHMARK_MAIN();
