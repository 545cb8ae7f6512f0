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
#include <tuple>
#include <vector>

#include "mocha/decode.hpp"
#include "mocha/model.hpp"
#include "test_util.hpp"

namespace mocha {
namespace {

// Untrained models need a positive energy offset to emit anything.
Model emitting_model(std::uint64_t seed, double offset = 1.0) {
  ModelConfig config = testing::tiny_model(testing::tiny_task());
  config.energy_offset = offset;
  Rng rng(seed);
  return Model::random(config, rng);
}

Tensor memories_for(const Model& model, std::uint64_t seed, std::size_t raw_frames = 24) {
  Rng rng(seed);
  const Tensor x = testing::random_tensor(rng, raw_frames, model.config.feature_dim);
  return encode_values(model, x, EncoderMode{});
}

TEST(Hypothesis, NormalizedScoreCountsEveryStep) {
  Hypothesis h;
  h.score = -6.0;
  EXPECT_EQ(h.normalized_score(), -6.0);
  h.boundaries.positions = {1, 2, 4};
  EXPECT_EQ(h.normalized_score(), -2.0);
}

TEST(EffectiveMaxLen, DefaultsToFramesPlusOne) {
  EXPECT_EQ(effective_max_len(0, 12), 13u);
  EXPECT_EQ(effective_max_len(5, 12), 5u);
}

TEST(GreedyDecode, BoundariesNonDecreasingAndScoreFinite) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Model model = emitting_model(seed);
    const Tensor mem = memories_for(model, 100 + seed);
    const Hypothesis h = greedy_decode(model, mem);
    EXPECT_TRUE(std::isfinite(h.score));
    EXPECT_TRUE(std::is_sorted(h.boundaries.positions.begin(), h.boundaries.positions.end()));
    for (std::size_t b : h.boundaries.positions) {
      EXPECT_GE(b, 1u);
      EXPECT_LE(b, mem.rows());
    }
    EXPECT_EQ(h.steps(), h.tokens.size() + (h.ended_with_eos ? 1 : 0));
    EXPECT_GT(h.steps(), 0u);
  }
}

TEST(GreedyDecode, EnergyEvaluationsStayLinear) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Model model = emitting_model(seed, 0.0);
    const Tensor mem = memories_for(model, 200 + seed, 40);
    DecodeStats stats;
    const Hypothesis h = greedy_decode(model, mem, 0, &stats);
    const std::size_t t = mem.rows();
    const std::size_t w = model.config.chunk_width;
    EXPECT_EQ(stats.frames, t);
    EXPECT_LE(stats.monotonic_evaluations, t + h.steps());
    EXPECT_LE(stats.monotonic_evaluations, t + h.steps() * w);
    EXPECT_LE(stats.chunk_evaluations, h.steps() * w);
  }
}

TEST(GreedyDecode, MatchesHardOfflineDecode) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Model model = emitting_model(seed);
    const Tensor mem = memories_for(model, 300 + seed);
    const Hypothesis streaming = greedy_decode(model, mem);
    const Hypothesis offline = hard_offline_decode(model, mem);
    EXPECT_EQ(streaming.tokens, offline.tokens);
    EXPECT_EQ(streaming.boundaries, offline.boundaries);
    EXPECT_EQ(streaming.ended_with_eos, offline.ended_with_eos);
    EXPECT_NEAR(streaming.score, offline.score, 1e-9);
  }
}

TEST(GreedyDecode, NoSelectionEndsWithoutEos) {
  const Model model = emitting_model(1, -50.0);
  const Hypothesis h = greedy_decode(model, memories_for(model, 2));
  EXPECT_TRUE(h.tokens.empty());
  EXPECT_EQ(h.steps(), 0u);
  EXPECT_FALSE(h.ended_with_eos);
}

TEST(GreedyDecode, ImmediateEosGivesEmptyHypothesis) {
  Model model = emitting_model(3, 20.0);
  model.proj_b[kEos] = 1e3;
  const Hypothesis h = greedy_decode(model, memories_for(model, 4));
  EXPECT_TRUE(h.tokens.empty());
  EXPECT_TRUE(h.ended_with_eos);
  EXPECT_EQ(h.boundaries.positions, (std::vector<std::size_t>{1}));
}

TEST(GreedyDecode, RespectsStepLimit) {
  Model model = emitting_model(5, 20.0);
  model.proj_b[kEos] = -1e3;
  const Hypothesis h = greedy_decode(model, memories_for(model, 6), 3);
  EXPECT_EQ(h.steps(), 3u);
  EXPECT_FALSE(h.ended_with_eos);
}

TEST(BeamDecode, WidthOneIsGreedy) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Model model = emitting_model(seed);
    const Tensor mem = memories_for(model, 400 + seed);
    EXPECT_EQ(beam_decode(model, mem, 1), greedy_decode(model, mem));
  }
}

TEST(BeamDecode, ZeroWidthThrows) {
  const Model model = emitting_model(1);
  EXPECT_THROW(beam_decode(model, memories_for(model, 1), 0), Error);
}

TEST(BeamDecode, BoundariesNonDecreasingForEveryHypothesis) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Model model = emitting_model(seed);
    for (const Hypothesis& h : beam_search(model, memories_for(model, 500 + seed), 4)) {
      EXPECT_TRUE(std::is_sorted(h.boundaries.positions.begin(), h.boundaries.positions.end()));
      EXPECT_TRUE(std::isfinite(h.score));
    }
  }
}

TEST(BeamDecode, NormalizationOnlyReordersHypotheses) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Model model = emitting_model(seed);
    const Tensor mem = memories_for(model, 600 + seed);
    std::vector<Hypothesis> normalized = beam_search(model, mem, 4, 0, true);
    std::vector<Hypothesis> raw = beam_search(model, mem, 4, 0, false);
    ASSERT_EQ(normalized.size(), raw.size());
    for (std::size_t k = 1; k < normalized.size(); ++k) {
      EXPECT_GE(normalized[k - 1].normalized_score(), normalized[k].normalized_score());
      EXPECT_GE(raw[k - 1].score, raw[k].score);
    }
    const auto by_tokens = [](const Hypothesis& a, const Hypothesis& b) {
      return std::tie(a.tokens, a.boundaries.positions, a.ended_with_eos) <
             std::tie(b.tokens, b.boundaries.positions, b.ended_with_eos);
    };
    std::sort(normalized.begin(), normalized.end(), by_tokens);
    std::sort(raw.begin(), raw.end(), by_tokens);
    EXPECT_EQ(normalized, raw);
  }
}

TEST(BeamDecode, BestIsTopOfNormalizedList) {
  const Model model = emitting_model(7);
  const Tensor mem = memories_for(model, 700);
  const std::vector<Hypothesis> nbest = beam_search(model, mem, 3);
  ASSERT_FALSE(nbest.empty());
  EXPECT_EQ(beam_decode(model, mem, 3), nbest.front());
}

}  // namespace
}  // namespace mocha
