/* Copyright 2026 The mocha-ctcst Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "mocha/attention.hpp"
#include "mocha/ctc.hpp"
#include "mocha/data.hpp"
#include "mocha/decode.hpp"
#include "mocha/model.hpp"
#include "mocha/numerics.hpp"

namespace mocha {
namespace {

Tensor uniform(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t = Tensor::matrix(rows, cols);
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = d(rng);
  return t;
}

Tensor log_probs(Rng& rng, std::size_t rows, std::size_t cols) {
  Tensor t = uniform(rng, rows, cols, -2.0, 2.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double z = logsumexp(t.row_span(r));
    for (double& v : t.row_span(r)) v -= z;
  }
  return t;
}

ToyTaskSpec bench_task() {
  ToyTaskSpec spec;
  spec.num_symbols = 6;
  spec.feature_dim = 8;
  return spec;
}

ModelConfig bench_model() {
  const ToyTaskSpec task = bench_task();
  ModelConfig c;
  c.feature_dim = task.feature_dim;
  c.vocab_size = task.vocab_size();
  c.energy_offset = 1.0;
  return c;
}

void BM_ExpectedAlignment(benchmark::State& state) {
  const auto t = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor p = uniform(rng, 8, t, 0.01, 0.99);
  for (auto _ : state) benchmark::DoNotOptimize(expected_alignment(p));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ExpectedAlignment)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void BM_ChunkwiseAttention(benchmark::State& state) {
  const auto t = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Tensor alpha = expected_alignment(uniform(rng, 8, t, 0.01, 0.99));
  const Tensor u = uniform(rng, 8, t, -3.0, 3.0);
  for (auto _ : state) benchmark::DoNotOptimize(chunkwise_attention(alpha, u, 4));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ChunkwiseAttention)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void BM_CtcLoss(benchmark::State& state) {
  const auto t = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const Tensor lp = log_probs(rng, t, 8);
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < t / 4; ++i) labels.push_back(2 + i % 6);
  for (auto _ : state) benchmark::DoNotOptimize(ctc_loss(lp, labels));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CtcLoss)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void BM_CtcForcedAlign(benchmark::State& state) {
  const auto t = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  const Tensor lp = log_probs(rng, t, 8);
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < t / 4; ++i) labels.push_back(2 + i % 6);
  for (auto _ : state) benchmark::DoNotOptimize(ctc_forced_align(lp, labels));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CtcForcedAlign)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void BM_EncodeOffline(benchmark::State& state) {
  Rng rng(5);
  const Model model = Model::random(bench_model(), rng);
  const Tensor x = uniform(rng, static_cast<std::size_t>(state.range(0)), 8, -1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(encode_values(model, x, EncoderMode{}));
}
BENCHMARK(BM_EncodeOffline)->Arg(48)->Arg(192);

void BM_EncodeLatencyControlled(benchmark::State& state) {
  Rng rng(5);
  const Model model = Model::random(bench_model(), rng);
  const Tensor x = uniform(rng, static_cast<std::size_t>(state.range(0)), 8, -1.0, 1.0);
  const EncoderMode mode{EncoderKind::kLcBlstm, ChunkConfig{8, 4}};
  for (auto _ : state) benchmark::DoNotOptimize(encode_values(model, x, mode));
}
BENCHMARK(BM_EncodeLatencyControlled)->Arg(48)->Arg(192);

void BM_GreedyDecode(benchmark::State& state) {
  Rng rng(6);
  const Model model = Model::random(bench_model(), rng);
  const Tensor x = uniform(rng, static_cast<std::size_t>(state.range(0)), 8, -1.0, 1.0);
  const Tensor mem = encode_values(model, x, EncoderMode{});
  for (auto _ : state) benchmark::DoNotOptimize(greedy_decode(model, mem));
}
BENCHMARK(BM_GreedyDecode)->Arg(48)->Arg(192);

void BM_BeamDecode(benchmark::State& state) {
  Rng rng(7);
  const Model model = Model::random(bench_model(), rng);
  const Tensor x = uniform(rng, 48, 8, -1.0, 1.0);
  const Tensor mem = encode_values(model, x, EncoderMode{});
  const auto beam = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(beam_decode(model, mem, beam));
}
BENCHMARK(BM_BeamDecode)->Arg(1)->Arg(4)->Arg(10);

void BM_ForwardBackward(benchmark::State& state) {
  Rng rng(8);
  Model model = Model::random(bench_model(), rng);
  const Utterance utt = generate_toy_batch(bench_task(), 1, 9).front();
  ForwardOptions options;
  options.weights = LossWeights::stage2();
  for (auto _ : state) {
    Graph g;
    const UtteranceForward f = forward_utterance(g, model, utt.features, utt.labels, options);
    g.backward(f.total, 1.0);
    benchmark::DoNotOptimize(f.parts.total);
  }
}
BENCHMARK(BM_ForwardBackward);

}  // namespace
}  // namespace mocha

BENCHMARK_MAIN();
