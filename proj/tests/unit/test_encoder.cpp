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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mocha/autograd.hpp"
#include "mocha/encoder.hpp"
#include "test_util.hpp"

namespace mocha {
namespace {

using testing::random_tensor;

std::vector<EncoderLayer> random_layers(std::size_t count, std::size_t input, std::size_t hidden,
                                        Rng& rng) {
  std::vector<EncoderLayer> layers;
  for (std::size_t l = 0; l < count; ++l) {
    const std::size_t in = l == 0 ? input : hidden;
    layers.push_back({LstmWeights::random(in, hidden, rng), LstmWeights::random(in, hidden, rng)});
  }
  return layers;
}

Tensor run_lc(std::vector<EncoderLayer>& layers, const Tensor& frames, ChunkConfig cfg) {
  Graph g(false);
  return lc_blstm_forward(g, layers, g.constant(frames), cfg).memories.value();
}

TEST(Subsample, EightFramesByFourGiveTwo) {
  Rng rng(1);
  const Tensor x = random_tensor(rng, 8, 3);
  const Tensor y = subsample(x, 4);
  EXPECT_EQ(y.rows(), 2u);
  EXPECT_EQ(y.cols(), 12u);
  for (std::size_t k = 0; k < 4; ++k) {
    for (std::size_t d = 0; d < 3; ++d) {
      EXPECT_EQ(y.at(1, k * 3 + d), x.at(4 + k, d));
    }
  }
}

TEST(Subsample, FactorOneIsIdentity) {
  Rng rng(2);
  const Tensor x = random_tensor(rng, 5, 4);
  EXPECT_EQ(subsample(x, 1), x);
}

TEST(Subsample, SevenFramesByFourPadFinalSlotWithZeros) {
  Rng rng(3);
  const Tensor x = random_tensor(rng, 7, 2);
  const Tensor y = subsample(x, 4);
  ASSERT_EQ(y.rows(), 2u);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t d = 0; d < 2; ++d) EXPECT_EQ(y.at(1, k * 2 + d), x.at(4 + k, d));
  }
  EXPECT_EQ(y.at(1, 6), 0.0);
  EXPECT_EQ(y.at(1, 7), 0.0);
}

TEST(Subsample, LengthIsCeilingOfRatio) {
  Rng rng(4);
  for (std::size_t t0 = 1; t0 <= 13; ++t0) {
    for (std::size_t factor = 1; factor <= 5; ++factor) {
      EXPECT_EQ(subsample(random_tensor(rng, t0, 2), factor).rows(), (t0 + factor - 1) / factor);
    }
  }
}

TEST(Subsample, ZeroFactorThrows) {
  EXPECT_THROW(subsample(Tensor::matrix(3, 2), 0), Error);
}

TEST(LstmForward, ZeroWeightsGiveZeroOutputs) {
  Rng rng(5);
  LstmWeights w = LstmWeights::zeros(3, 4);
  Graph g(false);
  const LstmOutput out = lstm_forward(g, w, g.constant(random_tensor(rng, 6, 3)), zero_state(g, 4));
  for (double v : out.outputs.value().data()) EXPECT_EQ(v, 0.0);
  for (double v : out.state.c.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(LstmForward, SplitWithCarriedStateMatchesSingleShot) {
  Rng rng(6);
  LstmWeights w = LstmWeights::random(3, 5, rng);
  const Tensor x = random_tensor(rng, 9, 3);
  Graph g(false);
  const Var frames = g.constant(x);
  const LstmOutput whole = lstm_forward(g, w, frames, zero_state(g, 5));
  const LstmOutput first = lstm_forward(g, w, slice_rows(frames, 0, 4), zero_state(g, 5));
  const LstmOutput second = lstm_forward(g, w, slice_rows(frames, 4, 5), first.state);
  const std::vector<Var> parts{first.outputs, second.outputs};
  const Var joined = concat_rows(parts);
  EXPECT_LE(testing::max_abs_diff(joined.value(), whole.outputs.value()), 1e-12);
  EXPECT_LE(testing::max_abs_diff(second.state.c.value(), whole.state.c.value()), 1e-12);
}

TEST(LstmForward, SingleFrameMatchesHandComputedCell) {
  LstmWeights w = LstmWeights::zeros(1, 1);
  w.w_x.storage() = {0.5, 1.0, 0.25, -0.5};  // (i, f, g, o)
  w.w_h.storage() = {0.1, 0.1, 0.1, 0.1};
  w.b.storage() = {0.0, 1.0, 0.0, 0.0};
  Graph g(false);
  LstmState s{g.constant(Tensor::matrix(1, 1, 0.2)), g.constant(Tensor::matrix(1, 1, -0.3))};
  const LstmOutput out = lstm_forward(g, w, g.constant(Tensor::matrix(1, 1, 2.0)), s);
  const auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  const double i = sig(2.0 * 0.5 + 0.02);
  const double f = sig(2.0 * 1.0 + 0.02 + 1.0);
  const double gg = std::tanh(2.0 * 0.25 + 0.02);
  const double o = sig(2.0 * -0.5 + 0.02);
  const double c = f * -0.3 + i * gg;
  EXPECT_NEAR(out.state.c.item(), c, 1e-15);
  EXPECT_NEAR(out.outputs.item(), o * std::tanh(c), 1e-15);
}

TEST(LstmForward, ReverseKeepsInputOrder) {
  Rng rng(7);
  LstmWeights w = LstmWeights::random(2, 3, rng);
  const Tensor x = random_tensor(rng, 5, 2);
  Tensor flipped = Tensor::matrix(5, 2);
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t d = 0; d < 2; ++d) flipped.at(t, d) = x.at(4 - t, d);
  }
  Graph g(false);
  const Tensor rev = lstm_forward(g, w, g.constant(x), zero_state(g, 3), true).outputs.value();
  const Tensor fwd = lstm_forward(g, w, g.constant(flipped), zero_state(g, 3)).outputs.value();
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(rev.at(t, k), fwd.at(4 - t, k));
  }
}

TEST(LstmForward, ShapeMismatchThrows) {
  LstmWeights w = LstmWeights::zeros(3, 4);
  Graph g(false);
  EXPECT_THROW(lstm_forward(g, w, g.constant(Tensor::matrix(2, 2)), zero_state(g, 4)), Error);
  EXPECT_THROW(lstm_forward(g, w, g.constant(Tensor::matrix(2, 3)), zero_state(g, 5)), Error);
}

TEST(ChunkSchedule, HundredFramesFortyPlusTwenty) {
  const std::vector<ChunkSpan> spans = chunk_schedule(100, {40, 20});
  ASSERT_EQ(spans.size(), 3u);
  EXPECT_EQ(spans[0].begin, 0u);
  EXPECT_EQ(spans[0].end, 40u);
  EXPECT_EQ(spans[0].window_end, 60u);
  EXPECT_EQ(spans[1].begin, 40u);
  EXPECT_EQ(spans[1].end, 80u);
  EXPECT_EQ(spans[1].window_end, 100u);
  EXPECT_EQ(spans[2].begin, 80u);
  EXPECT_EQ(spans[2].end, 100u);
  EXPECT_EQ(spans[2].window_end, 100u);
}

TEST(ChunkSchedule, FortyPlusFortyWindowSpansEightyFrames) {
  const std::vector<ChunkSpan> spans = chunk_schedule(200, {40, 40});
  EXPECT_EQ(spans[0].window_end - spans[0].begin, 80u);
  EXPECT_EQ(spans[1].window_end - spans[1].begin, 80u);
}

TEST(ChunkSchedule, OfflineIsOneChunk) {
  const std::vector<ChunkSpan> spans = chunk_schedule(17, ChunkConfig::offline());
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].end, 17u);
  EXPECT_EQ(spans[0].window_end, 17u);
}

TEST(ChunkSchedule, ZeroChunkSizeThrows) {
  EXPECT_THROW(chunk_schedule(5, {0, 1}), Error);
}

TEST(ChunkSchedule, SpansTileTheSequenceForRandomSizes) {
  Rng rng(8);
  std::uniform_int_distribution<std::size_t> frames(1, 60);
  std::uniform_int_distribution<std::size_t> nc(1, 20);
  std::uniform_int_distribution<std::size_t> nr(0, 20);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t t = frames(rng);
    const ChunkConfig cfg{nc(rng), nr(rng)};
    std::size_t next = 0;
    for (const ChunkSpan& s : chunk_schedule(t, cfg)) {
      EXPECT_EQ(s.begin, next);
      EXPECT_GT(s.end, s.begin);
      EXPECT_LE(s.end - s.begin, cfg.n_c);
      EXPECT_EQ(s.window_end, std::min(t, s.end + cfg.n_r));
      next = s.end;
    }
    EXPECT_EQ(next, t);
  }
}

TEST(ChunkConfig, SubsampledUsesIntegerDivisionWithFloorOne) {
  const ChunkConfig a = ChunkConfig{40, 20}.subsampled(4);
  EXPECT_EQ(a.n_c, 10u);
  EXPECT_EQ(a.n_r, 5u);
  const ChunkConfig b = ChunkConfig{3, 1}.subsampled(4);
  EXPECT_EQ(b.n_c, 1u);
  EXPECT_EQ(b.n_r, 0u);
  EXPECT_TRUE(ChunkConfig::offline().subsampled(4).is_offline());
  EXPECT_THROW(ChunkConfig::offline().subsampled(0), Error);
}

TEST(EncoderKind, NamesRoundTrip) {
  for (EncoderKind k : {EncoderKind::kLstm, EncoderKind::kBlstm, EncoderKind::kLcBlstm}) {
    EXPECT_EQ(parse_encoder_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_encoder_kind("transformer"), Error);
}

TEST(LcBlstm, SingleChunkWithoutLookaheadEqualsBidirectionalPass) {
  Rng rng(9);
  std::vector<EncoderLayer> layers = random_layers(1, 3, 4, rng);
  const Tensor x = random_tensor(rng, 11, 3);
  Graph g(false);
  const Var frames = g.constant(x);
  const Var fwd = lstm_forward(g, layers[0].forward, frames, zero_state(g, 4)).outputs;
  const Var bwd = lstm_forward(g, layers[0].backward, frames, zero_state(g, 4), true).outputs;
  const Tensor direct = add(fwd, bwd).value();
  EXPECT_LE(testing::max_abs_diff(run_lc(layers, x, {11, 0}), direct), 1e-12);
  EXPECT_LE(testing::max_abs_diff(run_lc(layers, x, ChunkConfig::offline()), direct), 1e-12);
}

TEST(LcBlstm, ForwardStateCarriesAcrossChunks) {
  Rng rng(10);
  std::vector<EncoderLayer> layers = random_layers(1, 3, 4, rng);
  layers[0].backward = LstmWeights::zeros(3, 4);
  const Tensor x = random_tensor(rng, 14, 3);
  Graph g(false);
  const Tensor whole =
      lstm_forward(g, layers[0].forward, g.constant(x), zero_state(g, 4)).outputs.value();
  for (const ChunkConfig cfg : {ChunkConfig{3, 0}, ChunkConfig{4, 2}, ChunkConfig{5, 9}}) {
    EXPECT_LE(testing::max_abs_diff(run_lc(layers, x, cfg), whole), 1e-12);
  }
}

TEST(LcBlstm, FramesPastLookaheadNeverChangeAChunk) {
  Rng rng(11);
  std::vector<EncoderLayer> layers = random_layers(2, 2, 3, rng);
  const Tensor x = random_tensor(rng, 15, 2);
  for (const ChunkConfig cfg : {ChunkConfig{2, 1}, ChunkConfig{4, 3}, ChunkConfig{5, 0}}) {
    const Tensor base = run_lc(layers, x, cfg);
    for (const ChunkSpan& s : chunk_schedule(15, cfg)) {
      if (s.window_end == 15) continue;
      Tensor perturbed = x;
      for (std::size_t t = s.window_end; t < 15; ++t) {
        for (std::size_t d = 0; d < 2; ++d) perturbed.at(t, d) += 1.0;
      }
      const Tensor out = run_lc(layers, perturbed, cfg);
      for (std::size_t t = s.begin; t < s.end; ++t) {
        for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(out.at(t, k), base.at(t, k));
      }
    }
  }
}

TEST(LcBlstm, LookaheadFramesDoChangeTheChunk) {
  Rng rng(12);
  std::vector<EncoderLayer> layers = random_layers(1, 2, 3, rng);
  const Tensor x = random_tensor(rng, 8, 2);
  const Tensor base = run_lc(layers, x, {4, 2});
  Tensor perturbed = x;
  perturbed.at(5, 0) += 1.0;
  EXPECT_NE(run_lc(layers, perturbed, {4, 2}).at(3, 0), base.at(3, 0));
}

TEST(LcBlstm, OutputLengthMatchesInputForRandomSizes) {
  Rng rng(13);
  std::vector<EncoderLayer> layers = random_layers(1, 2, 2, rng);
  std::uniform_int_distribution<std::size_t> frames(1, 30);
  std::uniform_int_distribution<std::size_t> nc(1, 10);
  std::uniform_int_distribution<std::size_t> nr(0, 10);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t t = frames(rng);
    Graph g(false);
    const EncoderOutput out =
        lc_blstm_forward(g, layers, g.constant(random_tensor(rng, t, 2)), {nc(rng), nr(rng)});
    EXPECT_EQ(out.length, t);
    EXPECT_EQ(out.memories.rows(), t);
    for (double v : out.memories.value().data()) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(LcBlstm, NoLayersThrows) {
  std::vector<EncoderLayer> none;
  Graph g(false);
  EXPECT_THROW(lc_blstm_forward(g, none, g.constant(Tensor::matrix(3, 2)), {2, 0}), Error);
}

TEST(LstmEncoder, StacksForwardDirections) {
  Rng rng(14);
  std::vector<EncoderLayer> layers = random_layers(2, 3, 4, rng);
  const Tensor x = random_tensor(rng, 7, 3);
  Graph g(false);
  const Var l1 = lstm_forward(g, layers[0].forward, g.constant(x), zero_state(g, 4)).outputs;
  const Var l2 = lstm_forward(g, layers[1].forward, l1, zero_state(g, 4)).outputs;
  const EncoderOutput out = lstm_encoder_forward(g, layers, g.constant(x));
  EXPECT_EQ(out.length, 7u);
  EXPECT_LE(testing::max_abs_diff(out.memories.value(), l2.value()), 1e-12);
}

TEST(LcBlstm, GradientMatchesFiniteDifferences) {
  Rng rng(15);
  std::vector<EncoderLayer> layers = random_layers(1, 2, 3, rng);
  const Tensor x = random_tensor(rng, 6, 2);
  const Tensor weights = random_tensor(rng, 6, 3);
  std::vector<NamedParam> params{{"fw_x", &layers[0].forward.w_x},
                                 {"fw_h", &layers[0].forward.w_h},
                                 {"bw_x", &layers[0].backward.w_x},
                                 {"bw_b", &layers[0].backward.b}};
  const Objective f = [&](bool with_grad) {
    Graph g;
    const Var mem = lc_blstm_forward(g, layers, g.constant(x), {2, 1}).memories;
    const Var loss = sum(mul(mem, g.constant(weights)));
    if (with_grad) {
      for (const auto& p : params) p.tensor->zero_grad();
      g.backward(loss);
      g.accumulate_param_grads();
    }
    return loss.item();
  };
  EXPECT_LT(grad_check(f, params).max_rel_error, 1e-6);
}

}  // namespace
}  // namespace mocha
