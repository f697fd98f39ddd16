#include <benchmark/benchmark.h>

#include "rlens/dftlrp.hpp"
#include "rlens/fixtures.hpp"
#include "rlens/lrp.hpp"
#include "rlens/reference_models.hpp"
#include "rlens/signal.hpp"

using namespace rlens;

namespace {

const Waveform& clip() {
  static const Waveform w = synthetic_clips(1, 1).front().waveform;
  return w;
}

void BM_Dft(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::vector<double> x(clip().samples.begin(), clip().samples.begin() + static_cast<long>(n));
  for (auto _ : state) benchmark::DoNotOptimize(dft(x));
}
BENCHMARK(BM_Dft)->Arg(800)->Arg(1024)->Arg(16000);

void BM_Logmel(benchmark::State& state) {
  const FrontendConfig fe;
  for (auto _ : state) benchmark::DoNotOptimize(logmel_spectrogram(clip(), fe));
}
BENCHMARK(BM_Logmel);

void BM_ForwardWaveform(benchmark::State& state) {
  const auto model = build_waveform_cnn();
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, Tensor({1, 16000}, clip().samples)));
}
BENCHMARK(BM_ForwardWaveform)->Unit(benchmark::kMillisecond);

void BM_ForwardLogmel(benchmark::State& state) {
  const auto model = build_logmel_cnn();
  const auto lm = logmel_spectrogram(clip(), FrontendConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, Tensor({1, 64, 20}, lm.values.data())));
}
BENCHMARK(BM_ForwardLogmel)->Unit(benchmark::kMillisecond);

void BM_LrpWaveform(benchmark::State& state) {
  const auto model = build_waveform_cnn();
  const auto trace = forward(model, Tensor({1, 16000}, clip().samples));
  const auto rule = composite_epsilon_plus(model);
  for (auto _ : state) benchmark::DoNotOptimize(lrp_backward(model, trace, 0, rule));
}
BENCHMARK(BM_LrpWaveform)->Unit(benchmark::kMillisecond);

void BM_DftLrp(benchmark::State& state) {
  const auto model = tiny_1d_model();
  const auto ex = lrp_backward(model, forward(model, Tensor({1, 16000}, clip().samples)), 0, LrpRule::epsilon());
  const VirtualInspectionConfig cfg;
  const auto fb = FrontendConfig{}.filterbank(16000);
  for (auto _ : state) benchmark::DoNotOptimize(relevance_to_mel(dft_lrp(clip(), ex.map, cfg), fb));
}
BENCHMARK(BM_DftLrp)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
