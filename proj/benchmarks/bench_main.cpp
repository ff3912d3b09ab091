#include <benchmark/benchmark.h>

#include "fqs/anomaly.hpp"
#include "fqs/forecaster.hpp"
#include "fqs/synthbench.hpp"

namespace {

fqs::Series series(std::size_t hours) {
    fqs::Scenario sc;
    sc.duration_hours = hours;
    return fqs::generate(sc).series;
}

fqs::ModelState model(std::size_t window, std::size_t hidden, const fqs::Series& s) {
    fqs::ModelConfig c;
    c.window_length = window;
    c.hidden = hidden;
    c.heads = 2;
    auto m = fqs::init(c, 1);
    m.norm = fqs::compute_stats(s, fqs::TimeRange{s.first(), s.last() + 1});
    return m;
}

void BM_Forward(benchmark::State& state) {
    const auto window = static_cast<std::size_t>(state.range(0));
    const auto s = series(window + 50);
    const auto m = model(window, 16, s);
    const auto windows = fqs::build_windows(s, window);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fqs::forward(m, windows.front()));
    }
}
BENCHMARK(BM_Forward)->Arg(24)->Arg(96);

void BM_Gradients(benchmark::State& state) {
    const auto s = series(24 + 64);
    const auto m = model(24, 16, s);
    const auto windows = fqs::build_windows(s, 24);
    const std::span<const fqs::Window> batch(windows.data(), 64);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fqs::gradients(m, batch));
    }
    state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_Gradients);

void BM_RunSliding(benchmark::State& state) {
    const auto s = series(24 * 30);
    const auto m = model(24, 16, s);
    fqs::DetectorConfig dc;
    dc.window_length = 24;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fqs::run_sliding(m, s, dc, static_cast<std::size_t>(state.range(0))));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.size()));
}
BENCHMARK(BM_RunSliding)->Arg(1)->Arg(2);

}  // namespace

BENCHMARK_MAIN();
