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
#include <fstream>
#include <random>
#include <vector>

#include "mocha/metrics.hpp"
#include "mocha/oracles/brute_force.hpp"
#include "mocha/tensor.hpp"
#include "test_util.hpp"

namespace mocha {
namespace {

using Tokens = std::vector<std::size_t>;

// Two-row Levenshtein distance.
std::size_t dp_distance(const Tokens& hyp, const Tokens& ref) {
  std::vector<std::size_t> prev(hyp.size() + 1);
  std::vector<std::size_t> cur(hyp.size() + 1);
  for (std::size_t j = 0; j <= hyp.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      cur[j] = std::min({prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0u : 1u), prev[j] + 1,
                         cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[hyp.size()];
}

Tokens random_tokens(Rng& rng, std::size_t max_len, std::size_t alphabet) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> sym(1, alphabet);
  Tokens out(len(rng));
  for (auto& t : out) t = sym(rng);
  return out;
}

UtteranceScore score(std::string id, std::size_t frames, std::size_t ref, std::size_t sub,
                     std::size_t del = 0, std::size_t ins = 0) {
  return {std::move(id), frames, EditCounts{sub, del, ins, ref}};
}

TEST(WordErrorRate, SingleEditExamples) {
  const Tokens ref{1, 2, 3};
  EXPECT_EQ(word_error_rate(Tokens{1, 2, 3}, ref), (EditCounts{0, 0, 0, 3}));
  EXPECT_EQ(word_error_rate(Tokens{1, 3}, ref), (EditCounts{0, 1, 0, 3}));
  EXPECT_EQ(word_error_rate(Tokens{1, 2, 3, 4}, ref), (EditCounts{0, 0, 1, 3}));
  EXPECT_EQ(word_error_rate(Tokens{1, 5, 3}, ref), (EditCounts{1, 0, 0, 3}));
  EXPECT_DOUBLE_EQ(word_error_rate(Tokens{1, 5, 3}, ref).wer(), 1.0 / 3.0);
}

TEST(WordErrorRate, EmptyHypothesisDeletesEverything) {
  const EditCounts c = word_error_rate(Tokens{}, Tokens{4, 4});
  EXPECT_EQ(c, (EditCounts{0, 2, 0, 2}));
  EXPECT_DOUBLE_EQ(c.wer(), 1.0);
}

TEST(WordErrorRate, EmptyReferenceThrows) {
  EXPECT_THROW(word_error_rate(Tokens{1}, Tokens{}), Error);
}

TEST(WordErrorRate, MatchesDynamicProgramAndRecursion) {
  Rng rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    Tokens ref = random_tokens(rng, 6, 3);
    if (ref.empty()) ref.push_back(1);
    const Tokens hyp = random_tokens(rng, 6, 3);
    const EditCounts c = word_error_rate(hyp, ref);
    EXPECT_EQ(c.errors(), dp_distance(hyp, ref));
    EXPECT_EQ(c.errors(), oracles::recursive_edit_distance(hyp, ref));
    EXPECT_EQ(c.reference_length, ref.size());
    EXPECT_EQ(hyp.size() + c.deletions, ref.size() + c.insertions);
  }
}

TEST(Buckets, EdgesSplitByFrameCountAndEmptyBucketsAreOmitted) {
  const std::vector<UtteranceScore> results{score("a", 5, 4, 1), score("b", 10, 6, 0, 1),
                                            score("c", 25, 10, 2, 0, 2), score("d", 9, 2, 0)};
  const std::vector<std::size_t> edges{10, 20, 30};
  const std::vector<Bucket> b = bucketed_report(results, edges);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0].lower, 0u);
  EXPECT_EQ(b[0].upper, 10u);
  EXPECT_EQ(b[0].utterances, 2u);
  EXPECT_EQ(b[0].errors, 1u);
  EXPECT_EQ(b[0].reference_tokens, 6u);
  EXPECT_DOUBLE_EQ(b[0].wer, 1.0 / 6.0);
  EXPECT_EQ(b[1].lower, 10u);
  EXPECT_EQ(b[1].utterances, 1u);
  EXPECT_EQ(b[2].lower, 20u);
  EXPECT_EQ(b[2].upper, 30u);
  EXPECT_DOUBLE_EQ(b[2].wer, 0.4);
}

TEST(Buckets, LastBucketIsOpenEnded) {
  const std::vector<UtteranceScore> results{score("a", 100, 5, 1)};
  const std::vector<std::size_t> edges{10};
  const std::vector<Bucket> b = bucketed_report(results, edges);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].lower, 10u);
  EXPECT_FALSE(b[0].upper.has_value());
}

TEST(Buckets, NonIncreasingEdgesThrow) {
  const std::vector<UtteranceScore> results{score("a", 1, 1, 0)};
  EXPECT_THROW(bucketed_report(results, std::vector<std::size_t>{5, 5}), Error);
  EXPECT_THROW(bucketed_report(results, std::vector<std::size_t>{6, 2}), Error);
}

TEST(Buckets, CountsAddUpToCorpus) {
  Rng rng(22);
  std::uniform_int_distribution<std::size_t> frames(1, 200);
  std::uniform_int_distribution<std::size_t> small(0, 3);
  std::vector<UtteranceScore> results;
  for (int n = 0; n < 300; ++n) {
    results.push_back(score(std::to_string(n), frames(rng), 4 + small(rng), small(rng),
                            small(rng), small(rng)));
  }
  const std::vector<std::size_t> edges = decile_edges(results);
  EXPECT_TRUE(std::is_sorted(edges.begin(), edges.end()));
  EXPECT_EQ(std::adjacent_find(edges.begin(), edges.end()), edges.end());
  std::size_t utterances = 0;
  std::size_t errors = 0;
  std::size_t tokens = 0;
  for (const Bucket& b : bucketed_report(results, edges)) {
    utterances += b.utterances;
    errors += b.errors;
    tokens += b.reference_tokens;
  }
  EXPECT_EQ(utterances, results.size());
  EXPECT_DOUBLE_EQ(static_cast<double>(errors) / static_cast<double>(tokens),
                   corpus_wer(results));
}

TEST(DecileEdges, EvenlySpacedFrames) {
  std::vector<UtteranceScore> results;
  for (std::size_t f = 1; f <= 100; ++f) results.push_back(score("u", f, 1, 0));
  EXPECT_EQ(decile_edges(results),
            (std::vector<std::size_t>{11, 21, 31, 41, 51, 61, 71, 81, 91}));
  EXPECT_TRUE(decile_edges(std::vector<UtteranceScore>{}).empty());
}

TEST(CorpusWer, PoolsErrorsOverTokens) {
  const std::vector<UtteranceScore> results{score("a", 1, 4, 1), score("b", 1, 6, 0, 0, 2)};
  EXPECT_DOUBLE_EQ(corpus_wer(results), 0.3);
  EXPECT_EQ(corpus_wer(std::vector<UtteranceScore>{}), 0.0);
}

TEST(Results, SaveLoadRoundTrip) {
  testing::TempDir dir;
  const std::vector<UtteranceScore> results{score("a", 12, 4, 1, 2, 3), score("b", 7, 1, 0)};
  save_results(dir / "r.tsv", results);
  const std::vector<UtteranceScore> back = load_results(dir / "r.tsv");
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(back[k].id, results[k].id);
    EXPECT_EQ(back[k].frames, results[k].frames);
    EXPECT_EQ(back[k].counts, results[k].counts);
  }
}

TEST(Results, MalformedFilesThrow) {
  testing::TempDir dir;
  EXPECT_THROW(load_results(dir / "absent.tsv"), Error);
  std::ofstream(dir / "nohead.tsv") << "a\t1\t2\t0\t0\t0\n";
  EXPECT_THROW(load_results(dir / "nohead.tsv"), Error);
  save_results(dir / "short.tsv", std::vector<UtteranceScore>{});
  std::ofstream(dir / "short.tsv", std::ios::app) << "a\t1\t2\n";
  EXPECT_THROW(load_results(dir / "short.tsv"), Error);
}

}  // namespace
}  // namespace mocha
