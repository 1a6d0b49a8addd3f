#include <benchmark/benchmark.h>

#include "idt/discretizer.hpp"
#include "idt/infometrics.hpp"
#include "idt/synthloop.hpp"

namespace {

const idt::LinearRun& desk_run() {
  static const idt::LinearRun run = idt::run_linear_loop(
      idt::LinearLoopConfig::desk_default(1), idt::Perturbation::none(), 20);
  return run;
}

void BM_Discretize(benchmark::State& state) {
  const auto& run = desk_run();
  const auto params = idt::fit_discretizer(run.transitions, 3, 3.0);
  const auto grouping = idt::GroupingConfig::whole(params.state_dim, params.action_dim);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        idt::discretize(run.transitions[i++ % run.transitions.size()], params, grouping));
  }
}
BENCHMARK(BM_Discretize);

std::vector<idt::SymbolizedTransition> desk_symbols() {
  const auto& run = desk_run();
  const auto params = idt::fit_discretizer(run.transitions, 3, 3.0);
  return idt::discretize_all(run.transitions, params,
                             idt::GroupingConfig::whole(params.state_dim, params.action_dim));
}

void BM_WindowMetrics(benchmark::State& state) {
  const auto symbols = desk_symbols();
  const auto w = static_cast<std::size_t>(state.range(0));
  const idt::WindowSpec spec{w, w, idt::JointMode::PerGroupMean};
  const std::span<const idt::SymbolizedTransition> window(symbols.data(), w);
  for (auto _ : state) {
    benchmark::DoNotOptimize(idt::window_metrics(window, spec));
  }
}
BENCHMARK(BM_WindowMetrics)->Arg(300)->Arg(3000);

void BM_StreamMetrics(benchmark::State& state) {
  const auto symbols = desk_symbols();
  const idt::WindowSpec spec{300, static_cast<std::size_t>(state.range(0)),
                             idt::JointMode::PerGroupMean};
  for (auto _ : state) {
    benchmark::DoNotOptimize(idt::stream_metrics(symbols, spec));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(symbols.size()));
}
BENCHMARK(BM_StreamMetrics)->Arg(1)->Arg(50);

}  // namespace
BENCHMARK_MAIN();
