// Microbenchmarks for the hot paths: the per-sample filter kernel, the
// streaming front end, signal synthesis, the link simulator and the
// screening DSP. Run with --benchmark_min_time=... as usual.

#include <benchmark/benchmark.h>

#include <vector>

#include "ecgsim/afe.hpp"
#include "ecgsim/filter.hpp"
#include "ecgsim/link.hpp"
#include "ecgsim/screening.hpp"
#include "ecgsim/signal.hpp"
#include "ecgsim/trace.hpp"

using namespace ecgsim;

namespace {

SampleTrace bench_ecg(double duration_s) {
    EcgParams params;
    params.heart_rate_bpm = 72.0;
    params.rr_jitter = 0.05;
    return synthesize_ecg(params, duration_s, 1000.0, 7);
}

void BM_BiquadStep(benchmark::State& state) {
    BiquadFilter filter(design_biquad_notch(50.0, 5.0, 1000.0));
    double x = 1.0;
    for (auto _ : state) {
        x = filter.step(x);
        benchmark::DoNotOptimize(x);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_BiquadStep);

void BM_SynthesizeEcg(benchmark::State& state) {
    const double duration_s = static_cast<double>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(bench_ecg(duration_s));
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<int64_t>(duration_s * 1000.0));
}
BENCHMARK(BM_SynthesizeEcg)->Arg(10)->Arg(60);

void BM_AfeProcess(benchmark::State& state) {
    const SampleTrace diff = bench_ecg(static_cast<double>(state.range(0)));
    const SampleTrace cm = make_trace(1000.0, Unit::volt, diff.size());
    for (auto _ : state) {
        benchmark::DoNotOptimize(process_afe(diff, cm, AfeConfig{}, 3));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(diff.size()));
}
BENCHMARK(BM_AfeProcess)->Arg(10);

void BM_SimulateSession(benchmark::State& state) {
    SampleTrace codes = make_trace(1000.0, Unit::adc_code, 60000);
    for (std::size_t i = 0; i < codes.size(); ++i) {
        codes.samples[i] = static_cast<double>(i % 4096);
    }
    const std::vector<Frame> frames = packetize(codes, PacketFormat{});
    ChannelModel channel;
    channel.frame_loss_probability = 0.2;
    channel.seed = 9;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            simulate_session(frames, ConnectionParams{}, channel, 5, 4));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(frames.size()));
}
BENCHMARK(BM_SimulateSession);

void BM_DetectQrs(benchmark::State& state) {
    const SampleTrace trace = bench_ecg(static_cast<double>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(detect_qrs(trace, ScreeningConfig{}));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(trace.size()));
}
BENCHMARK(BM_DetectQrs)->Arg(30);

void BM_RemoveBaseline(benchmark::State& state) {
    const SampleTrace trace = bench_ecg(static_cast<double>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(remove_baseline(trace, MarConfig{}));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(trace.size()));
}
BENCHMARK(BM_RemoveBaseline)->Arg(30);

} // namespace

BENCHMARK_MAIN();
