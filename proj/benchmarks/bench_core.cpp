#include <benchmark/benchmark.h>

#include <random>

#include "tailprobe/eval.hpp"
#include "tailprobe/markov.hpp"
#include "tailprobe/scoring.hpp"
#include "tailprobe/synth.hpp"

namespace {

using namespace tailprobe;

TokenSequence random_tokens(std::mt19937_64& rng, std::size_t length, int alphabet) {
  std::uniform_int_distribution<int> symbol(0, alphabet - 1);
  TokenSequence out;
  for (std::size_t i = 0; i < length; ++i) out.push_back("w" + std::to_string(symbol(rng)));
  return out;
}

void BM_BScore(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto length = static_cast<std::size_t>(state.range(0));
  const TokenSequence tail = random_tokens(rng, length, 20);
  RegenerationSet omega;
  for (int k = 0; k < 10; ++k) omega.regens.push_back(random_tokens(rng, length, 20));
  for (auto _ : state) benchmark::DoNotOptimize(bscore(tail, omega, NgramConfig{}));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BScore)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

void BM_Evidence(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto length = static_cast<std::size_t>(state.range(0));
  const TokenSequence tail = random_tokens(rng, length, 4);
  RegenerationSet omega;
  for (int k = 0; k < 10; ++k) omega.regens.push_back(random_tokens(rng, length, 4));
  for (auto _ : state) benchmark::DoNotOptimize(extract_evidence(omega, tail, 4));
}
BENCHMARK(BM_Evidence)->RangeMultiplier(2)->Range(64, 512);

void BM_Roc(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<LabeledScore> scores;
  for (int i = 0; i < state.range(0); ++i) scores.push_back({normal(rng), i % 2 ? Label::kAi : Label::kHuman, ""});
  for (auto _ : state) benchmark::DoNotOptimize(roc(scores));
}
BENCHMARK(BM_Roc)->RangeMultiplier(4)->Range(256, 16384);

void BM_MarkovGenerate(benchmark::State& state) {
  SynthConfig cfg;
  cfg.ai_samples = cfg.human_samples = 1;
  cfg.composite_samples = cfg.b_samples = 0;
  const SynthBenchmark bench = build_synth_benchmark(cfg);
  const auto model = train_markov(bench.corpus_a, cfg.order, cfg.alpha);
  const TokenSequence prompt = tokenize(bench.corpus_a.front().text);
  GenerationParams params;
  params.max_tokens = 300;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    params.seed = seed++;
    benchmark::DoNotOptimize(model->generate(prompt, params));
  }
}
BENCHMARK(BM_MarkovGenerate);

}  // namespace

BENCHMARK_MAIN();
