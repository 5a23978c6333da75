#include <benchmark/benchmark.h>

#include "mosanet/assessor/model.hpp"
#include "mosanet/corpus/synth.hpp"
#include "mosanet/features/stft.hpp"
#include "mosanet/labels/metrics.hpp"
#include "mosanet/nn/ops.hpp"

using namespace mosanet;

static void BM_Stft(benchmark::State& state) {
  const auto x = corpus::synth_speech(1, static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(features::stft(x));
  state.SetItemsProcessed(state.iterations() * x.size());
}
BENCHMARK(BM_Stft)->Arg(1)->Arg(4);

static void BM_Stoi(benchmark::State& state) {
  const auto clean = corpus::synth_speech(2, 3.0);
  auto noisy = clean;
  const auto noise = corpus::synth_noise("white", 2, 3.0);
  for (std::size_t i = 0; i < noisy.size(); ++i) noisy.samples[i] += 0.1 * noise.samples[i];
  for (auto _ : state) benchmark::DoNotOptimize(labels::stoi(clean, noisy));
}
BENCHMARK(BM_Stoi)->Unit(benchmark::kMillisecond);

static void BM_AssessorForward(benchmark::State& state) {
  assessor::AssessorConfig cfg;
  cfg.arch = static_cast<assessor::Arch>(state.range(0));
  assessor::Assessor model(cfg, 1);
  const auto in = model.make_extractor().extract(corpus::synth_speech(3, 1.0), "bench");
  for (auto _ : state) benchmark::DoNotOptimize(model.assess(in));
  state.SetLabel(assessor::to_string(cfg.arch));
}
BENCHMARK(BM_AssessorForward)
    ->Arg(static_cast<int>(assessor::Arch::BLSTM))
    ->Arg(static_cast<int>(assessor::Arch::CRNN_AT))
    ->Unit(benchmark::kMillisecond);

static void BM_AssessorTrainStep(benchmark::State& state) {
  assessor::Assessor model(assessor::AssessorConfig{}, 1);
  const auto in = model.make_extractor().extract(corpus::synth_speech(4, 0.7), "bench");
  for (auto _ : state) {
    model.parameters().zero_grad();
    const auto out = model.forward(in);
    nn::Tensor loss = nn::sum_all(out.tasks.at(assessor::Task::Q).frames);
    loss.backward();
  }
}
BENCHMARK(BM_AssessorTrainStep)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
