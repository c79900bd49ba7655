#include "ihmon/error.hpp"
#include "ihmon/learner.hpp"
#include "ihmon/monitor.hpp"
#include "ihmon/risk.hpp"
#include "ihmon/suo.hpp"

#include <benchmark/benchmark.h>

#include <map>

using namespace ihmon;

namespace {

struct Fixture {
    std::unique_ptr<Suo> suo;
    std::size_t len = 0;
    std::size_t horizon = 0;
};

Fixture make(const std::string& name, std::map<std::string, double> params = {}) {
    BenchmarkConfig cfg;
    cfg.benchmark = name;
    cfg.params = std::move(params);
    Fixture f;
    f.suo = make_benchmark(cfg);
    f.len = cfg.trace_len;
    f.horizon = cfg.horizon;
    return f;
}

// Fresh learner model on the benchmark's learner space: wide intervals everywhere.
Ihmm fresh_model(const Suo& suo) { return init_learner(LearnerView(suo).space(), LearnerConfig{}).model; }

const char* kNames[] = {"unlikely", "snl", "evade", "airport"};

void BM_RiskIhmm(benchmark::State& state) {
    const Fixture f = make(kNames[state.range(0)]);
    const LearnerView view(*f.suo);
    const Ihmm im = fresh_model(*f.suo);
    const Spec spec = view.spec(f.horizon);
    for (auto _ : state) benchmark::DoNotOptimize(risk_ihmm(im, spec));
    state.SetLabel(kNames[state.range(0)]);
}
BENCHMARK(BM_RiskIhmm)->DenseRange(0, 3);

void BM_MonitorEvaluate(benchmark::State& state) {
    const Fixture f = make(kNames[state.range(0)]);
    const LearnerView view(*f.suo);
    const Ihmm im = fresh_model(*f.suo);
    const IhmmMonitor mon(im, view.spec(f.horizon));
    Rng rng(1);
    std::vector<Trace> traces;
    for (int k = 0; k < 64; ++k) traces.push_back(f.suo->emit_trace(f.suo->sample_path(f.len, rng), rng));
    std::size_t i = 0;
    for (auto _ : state) {
        try {
            benchmark::DoNotOptimize(mon.evaluate(traces[i++ % traces.size()]));
        } catch (const NoConsistentPath&) {
        }
    }
    state.SetLabel(kNames[state.range(0)]);
}
BENCHMARK(BM_MonitorEvaluate)->DenseRange(0, 3)->Unit(benchmark::kMicrosecond);

void BM_IdealMonitor(benchmark::State& state) {
    const Fixture f = make(kNames[state.range(0)]);
    Spec spec = f.suo->spec();
    spec.horizon = f.horizon;
    const HmmMonitor mon(f.suo->ground_truth(), spec);
    Rng rng(2);
    std::vector<Trace> traces;
    for (int k = 0; k < 64; ++k) traces.push_back(f.suo->emit_trace(f.suo->sample_path(f.len, rng), rng));
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(mon.evaluate(traces[i++ % traces.size()]));
    state.SetLabel(kNames[state.range(0)]);
}
BENCHMARK(BM_IdealMonitor)->DenseRange(0, 3)->Unit(benchmark::kMicrosecond);

void BM_LuiUpdate(benchmark::State& state) {
    const Fixture f = make(kNames[state.range(0)]);
    const LearnerView view(*f.suo);
    const LearnerState st = init_learner(view.space(), LearnerConfig{});
    Rng rng(3);
    std::vector<Path> batch;
    for (int k = 0; k < 100; ++k) {
        const Path p = f.suo->sample_path(f.len + f.horizon, rng);
        batch.push_back(view.to_learner(p, f.suo->emit_trace(p, rng)));
    }
    const CountTable counts = count_batch(batch, view.num_states());
    for (auto _ : state) {
        LearnerState copy = st;
        lui_update_in_place(copy, counts);
        benchmark::DoNotOptimize(copy);
    }
    state.SetLabel(kNames[state.range(0)]);
}
BENCHMARK(BM_LuiUpdate)->DenseRange(0, 3)->Unit(benchmark::kMicrosecond);

} // namespace

BENCHMARK_MAIN();
