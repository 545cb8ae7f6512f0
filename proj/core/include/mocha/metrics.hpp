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

#ifndef MOCHA_METRICS_HPP_
#define MOCHA_METRICS_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mocha {

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t reference_length = 0;

  std::size_t errors() const { return substitutions + deletions + insertions; }
  double wer() const;
  friend bool operator==(const EditCounts&, const EditCounts&) = default;
};

// Levenshtein alignment of hyp against ref. Throws Error on an empty
// reference.
EditCounts word_error_rate(std::span<const std::size_t> hyp, std::span<const std::size_t> ref);

struct UtteranceScore {
  std::string id;
  std::size_t frames = 0;  // input frames, used for bucketing
  EditCounts counts;
};

struct Bucket {
  std::size_t lower = 0;             // inclusive
  std::optional<std::size_t> upper;  // exclusive; open-ended when empty
  std::size_t utterances = 0;
  std::size_t errors = 0;
  std::size_t reference_tokens = 0;
  double wer = 0.0;
};

// Buckets [0, e1), [e1, e2), ..., [ek, inf). Empty buckets are omitted.
// Throws Error unless the edges are strictly increasing.
std::vector<Bucket> bucketed_report(std::span<const UtteranceScore> results,
                                    std::span<const std::size_t> edges);
// Interior decile edges of the frame counts, deduplicated.
std::vector<std::size_t> decile_edges(std::span<const UtteranceScore> results);

// Corpus error rate: total errors / total reference tokens.
double corpus_wer(std::span<const UtteranceScore> results);

void save_results(const std::filesystem::path& path, std::span<const UtteranceScore> results);
std::vector<UtteranceScore> load_results(const std::filesystem::path& path);

}  // namespace mocha

#endif  // MOCHA_METRICS_HPP_
