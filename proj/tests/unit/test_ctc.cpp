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

#include <cmath>
#include <random>
#include <vector>

#include "mocha/autograd.hpp"
#include "mocha/ctc.hpp"
#include "mocha/oracles/brute_force.hpp"
#include "test_util.hpp"

namespace mocha {
namespace {

using testing::random_log_probs;
using Labels = std::vector<std::size_t>;

constexpr std::size_t kA = 1;
constexpr std::size_t kB = 2;

Tensor uniform_log_probs(std::size_t t, std::size_t v) {
  return Tensor::matrix(t, v, -std::log(static_cast<double>(v)));
}

TEST(CtcLoss, SingleFrameSingleLabel) {
  Rng rng(1);
  const Tensor lp = random_log_probs(rng, 1, 3);
  EXPECT_DOUBLE_EQ(ctc_loss(lp, Labels{kA}).loss, -lp.at(0, kA));
}

TEST(CtcLoss, TwoFramesSumThreePaths) {
  Rng rng(2);
  const Tensor lp = random_log_probs(rng, 2, 3);
  const auto p = [&](std::size_t t, std::size_t k) { return std::exp(lp.at(t, k)); };
  const double total = p(0, kA) * p(1, kA) + p(0, kA) * p(1, kBlank) + p(0, kBlank) * p(1, kA);
  const double loss = ctc_loss(lp, Labels{kA}).loss;
  EXPECT_NEAR(loss, -std::log(total), 1e-10);
  EXPECT_NEAR(loss, -oracles::enumerate_ctc(lp, Labels{kA}).log_total, 1e-10);
}

TEST(CtcLoss, FiveFramesTwoLabelsMatchEnumeration) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor lp = random_log_probs(rng, 5, 4);
    EXPECT_NEAR(ctc_loss(lp, Labels{kA, kB}).loss,
                -oracles::enumerate_ctc(lp, Labels{kA, kB}).log_total, 1e-9);
  }
}

TEST(CtcLoss, RepeatedLabelsMatchEnumeration) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor lp = random_log_probs(rng, 6, 3);
    EXPECT_NEAR(ctc_loss(lp, Labels{kA, kA, kB}).loss,
                -oracles::enumerate_ctc(lp, Labels{kA, kA, kB}).log_total, 1e-9);
  }
}

TEST(CtcLoss, EmptyLabelsIsAllBlankPath) {
  Rng rng(5);
  const Tensor lp = random_log_probs(rng, 4, 3);
  double expected = 0.0;
  for (std::size_t t = 0; t < 4; ++t) expected -= lp.at(t, kBlank);
  EXPECT_NEAR(ctc_loss(lp, Labels{}).loss, expected, 1e-12);
}

TEST(CtcLoss, ForwardAndBackwardAgreeAtEveryFrame) {
  Rng rng(6);
  const Tensor lp = random_log_probs(rng, 7, 4);
  const Labels labels{kA, kB, kA};
  const CtcResult r = ctc_loss(lp, labels);
  const CtcLattice& lat = r.lattice;
  EXPECT_NEAR(log_add(lat.log_beta.at(0, 0), lat.log_beta.at(0, 1)), lat.log_likelihood, 1e-9);
  for (std::size_t t = 0; t < 7; ++t) {
    std::vector<double> terms;
    for (std::size_t s = 0; s < lat.extended_labels.size(); ++s) {
      terms.push_back(lat.log_alpha.at(t, s) + lat.log_beta.at(t, s) -
                      lp.at(t, lat.extended_labels[s]));
    }
    EXPECT_NEAR(logsumexp(terms), lat.log_likelihood, 1e-9);
  }
}

TEST(CtcLoss, TooFewFramesIsInfeasible) {
  Rng rng(7);
  EXPECT_THROW(ctc_loss(random_log_probs(rng, 2, 3), Labels{kA, kA}), CtcInfeasibleError);
  EXPECT_THROW(ctc_loss(random_log_probs(rng, 2, 4), Labels{kA, kB, kA}), CtcInfeasibleError);
  EXPECT_NO_THROW(ctc_loss(random_log_probs(rng, 3, 3), Labels{kA, kA}));
}

TEST(CtcLoss, BlankOrOutOfRangeLabelThrows) {
  Rng rng(8);
  const Tensor lp = random_log_probs(rng, 4, 3);
  EXPECT_THROW(ctc_loss(lp, Labels{kBlank}), Error);
  EXPECT_THROW(ctc_loss(lp, Labels{5}), Error);
}

TEST(CtcLoss, GradientMatchesFiniteDifferences) {
  Rng rng(9);
  const Labels labels{kA, kB, kA};
  const auto op = [&](Var x) { return ctc_loss(x, labels); };
  EXPECT_LT(testing::check_op_gradient(op, random_log_probs(rng, 6, 4)).max_rel_error, 1e-4);
}

TEST(CtcLoss, GradientThroughLogSoftmaxMatchesFiniteDifferences) {
  Rng rng(10);
  const Labels labels{kB, kA};
  const auto op = [&](Var x) { return ctc_loss(log_softmax_rows(x), labels); };
  EXPECT_LT(testing::check_op_gradient(op, testing::random_tensor(rng, 5, 3)).max_rel_error, 1e-4);
}

TEST(CtcLoss, GraphFormValueMatchesValueForm) {
  Rng rng(11);
  const Tensor lp = random_log_probs(rng, 5, 3);
  Graph g;
  EXPECT_EQ(ctc_loss(g.constant(lp), Labels{kA, kB}).item(), ctc_loss(lp, Labels{kA, kB}).loss);
}

TEST(ExtendLabels, InterleavesBlanks) {
  EXPECT_EQ(extend_labels(Labels{kA, kB}), (Labels{kBlank, kA, kBlank, kB, kBlank}));
  EXPECT_EQ(extend_labels(Labels{}), (Labels{kBlank}));
}

TEST(CtcMinFrames, CountsRepeats) {
  EXPECT_EQ(ctc_min_frames(Labels{kA, kB}), 2u);
  EXPECT_EQ(ctc_min_frames(Labels{kA, kA}), 3u);
  EXPECT_EQ(ctc_min_frames(Labels{kA, kA, kA, kB}), 6u);
  EXPECT_EQ(ctc_min_frames(Labels{}), 1u);
}

TEST(ForcedAlign, DenseWhenFramesEqualLabels) {
  Rng rng(12);
  const Labels labels{kA, kB, kA};
  EXPECT_EQ(ctc_forced_align(random_log_probs(rng, 3, 3), labels), labels);
}

TEST(ForcedAlign, RecoversOneHotPath) {
  const Labels path{kBlank, kA, kA, kBlank, kB, kB, kBlank};
  Tensor lp = Tensor::matrix(path.size(), 3, std::log(1e-6));
  for (std::size_t t = 0; t < path.size(); ++t) lp.at(t, path[t]) = std::log(1.0 - 2e-6);
  EXPECT_EQ(ctc_forced_align(lp, Labels{kA, kB}), path);
}

TEST(ForcedAlign, AttainsEnumeratedBestPath) {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor lp = random_log_probs(rng, 6, 3);
    const Labels path = ctc_forced_align(lp, Labels{kA, kB});
    EXPECT_EQ(ctc_collapse(path), (Labels{kA, kB}));
    EXPECT_NEAR(path_log_probability(lp, path),
                oracles::enumerate_ctc(lp, Labels{kA, kB}).log_best, 1e-12);
  }
}

TEST(ForcedAlign, TiesKeepTheEarlierEmission) {
  EXPECT_EQ(ctc_forced_align(uniform_log_probs(4, 3), Labels{kA, kB}),
            (Labels{kA, kB, kBlank, kBlank}));
  EXPECT_EQ(ctc_forced_align(uniform_log_probs(3, 2), Labels{kA}), (Labels{kA, kBlank, kBlank}));
}

TEST(ForcedAlign, InfeasibleThrows) {
  EXPECT_THROW(ctc_forced_align(uniform_log_probs(1, 3), Labels{kA, kB}), CtcInfeasibleError);
}

TEST(Collapse, MergesRepeatsAndDropsBlanks) {
  EXPECT_EQ(ctc_collapse(Labels{kBlank, kA, kA, kBlank, kA, kB, kB}), (Labels{kA, kA, kB}));
  EXPECT_TRUE(ctc_collapse(Labels{kBlank, kBlank}).empty());
}

TEST(ExtractBoundaries, LeftmostFrameOfEachRunPlusEos) {
  const Labels path{kBlank, kA, kA, kBlank, kB};
  EXPECT_EQ(extract_boundaries(path, false).positions, (Labels{2, 5}));
  EXPECT_EQ(extract_boundaries(path).positions, (Labels{2, 5, 5}));
}

TEST(ExtractBoundaries, SingleFrame) {
  EXPECT_EQ(extract_boundaries(Labels{kA}, false).positions, (Labels{1}));
  EXPECT_EQ(extract_boundaries(Labels{kA}).positions, (Labels{1, 1}));
}

TEST(ExtractBoundaries, BlankSplitsRepeatedToken) {
  EXPECT_EQ(extract_boundaries(Labels{kA, kBlank, kA}, false).positions, (Labels{1, 3}));
}

TEST(ExtractBoundaries, EosSitsAtLastFrame) {
  EXPECT_EQ(extract_boundaries(Labels{kA, kBlank, kBlank, kBlank}).positions, (Labels{1, 4}));
}

TEST(ExtractBoundaries, StrictlyIncreasingOnForcedPaths) {
  Rng rng(14);
  std::uniform_int_distribution<std::size_t> token(1, 3);
  for (int trial = 0; trial < 100; ++trial) {
    Labels labels;
    for (int k = 0; k < 3; ++k) labels.push_back(token(rng));
    const std::size_t t = ctc_min_frames(labels) + trial % 5;
    const Labels path = ctc_forced_align(random_log_probs(rng, t, 4), labels);
    const Labels b = extract_boundaries(path).positions;
    ASSERT_EQ(b.size(), labels.size() + 1);
    for (std::size_t i = 1; i + 1 < b.size(); ++i) EXPECT_LT(b[i - 1], b[i]);
    EXPECT_EQ(b.back(), t);
    EXPECT_LE(b[b.size() - 2], t);
    if (b[b.size() - 2] == t) {
      EXPECT_NE(path.back(), kBlank);
    }
  }
}

TEST(GreedySpikes, AllBlankGivesNone) {
  Tensor lp = Tensor::matrix(4, 3, std::log(0.1));
  for (std::size_t t = 0; t < 4; ++t) lp.at(t, kBlank) = std::log(0.8);
  EXPECT_TRUE(ctc_greedy_spikes(lp).empty());
}

TEST(GreedySpikes, OneHotSpikeAtFrameThree) {
  Tensor lp = Tensor::matrix(5, 3, kNegInf);
  for (std::size_t t = 0; t < 5; ++t) lp.at(t, kBlank) = 0.0;
  lp.at(2, kBlank) = kNegInf;
  lp.at(2, kA) = 0.0;
  EXPECT_EQ(ctc_greedy_spikes(lp), (std::vector<Spike>{{3, kA}}));
}

TEST(GreedySpikes, TiesGoToLowerIndex) {
  EXPECT_TRUE(ctc_greedy_spikes(uniform_log_probs(3, 3)).empty());
  Tensor lp = Tensor::matrix(1, 3, std::log(0.1));
  lp.at(0, kA) = std::log(0.45);
  lp.at(0, kB) = std::log(0.45);
  EXPECT_EQ(ctc_greedy_spikes(lp), (std::vector<Spike>{{1, kA}}));
}

}  // namespace
}  // namespace mocha
