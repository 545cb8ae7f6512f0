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

#include "mocha/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "mocha/tensor.hpp"

namespace mocha {
namespace {

constexpr const char* kResultsHeader = "id\tframes\tref_tokens\tsub\tdel\tins";

}  // namespace

double EditCounts::wer() const {
  return reference_length == 0 ? 0.0
                               : static_cast<double>(errors()) /
                                     static_cast<double>(reference_length);
}

EditCounts word_error_rate(std::span<const std::size_t> hyp, std::span<const std::size_t> ref) {
  if (ref.empty()) throw Error("word_error_rate: empty reference");
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  // cost[i][j] aligns ref[0, i) with hyp[0, j).
  std::vector<std::vector<std::size_t>> cost(n + 1, std::vector<std::size_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) cost[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) cost[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = cost[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cost[i][j] = std::min({diag, cost[i - 1][j] + 1, cost[i][j - 1] + 1});
    }
  }
  EditCounts out;
  out.reference_length = n;
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        cost[i][j] == cost[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++out.substitutions;
      --i;
      --j;
    } else if (i > 0 && cost[i][j] == cost[i - 1][j] + 1) {
      ++out.deletions;
      --i;
    } else {
      ++out.insertions;
      --j;
    }
  }
  return out;
}

std::vector<Bucket> bucketed_report(std::span<const UtteranceScore> results,
                                    std::span<const std::size_t> edges) {
  for (std::size_t k = 1; k < edges.size(); ++k) {
    if (edges[k] <= edges[k - 1]) throw Error("bucket edges must be strictly increasing");
  }
  std::vector<Bucket> all(edges.size() + 1);
  for (std::size_t k = 0; k < all.size(); ++k) {
    all[k].lower = k == 0 ? 0 : edges[k - 1];
    if (k < edges.size()) all[k].upper = edges[k];
  }
  for (const UtteranceScore& r : results) {
    const auto k = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), r.frames) -
                                            edges.begin());
    Bucket& b = all[k];
    ++b.utterances;
    b.errors += r.counts.errors();
    b.reference_tokens += r.counts.reference_length;
  }
  std::vector<Bucket> out;
  for (Bucket& b : all) {
    if (b.utterances == 0) continue;
    b.wer = b.reference_tokens == 0 ? 0.0
                                    : static_cast<double>(b.errors) /
                                          static_cast<double>(b.reference_tokens);
    out.push_back(b);
  }
  return out;
}

std::vector<std::size_t> decile_edges(std::span<const UtteranceScore> results) {
  std::vector<std::size_t> frames;
  for (const UtteranceScore& r : results) frames.push_back(r.frames);
  std::sort(frames.begin(), frames.end());
  std::vector<std::size_t> edges;
  if (frames.empty()) return edges;
  for (std::size_t d = 1; d < 10; ++d) {
    const std::size_t e = frames[d * frames.size() / 10];
    if (e > 0 && (edges.empty() || e > edges.back())) edges.push_back(e);
  }
  return edges;
}

double corpus_wer(std::span<const UtteranceScore> results) {
  std::size_t errors = 0;
  std::size_t tokens = 0;
  for (const UtteranceScore& r : results) {
    errors += r.counts.errors();
    tokens += r.counts.reference_length;
  }
  return tokens == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(tokens);
}

void save_results(const std::filesystem::path& path, std::span<const UtteranceScore> results) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write results {}", path.string()));
  out << kResultsHeader << '\n';
  for (const UtteranceScore& r : results) {
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", r.id, r.frames, r.counts.reference_length,
                       r.counts.substitutions, r.counts.deletions, r.counts.insertions);
  }
}

std::vector<UtteranceScore> load_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open results {}", path.string()));
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) {
    throw Error(fmt::format("{}: missing results header", path.string()));
  }
  std::vector<UtteranceScore> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    UtteranceScore r;
    if (!(fields >> r.id >> r.frames >> r.counts.reference_length >> r.counts.substitutions >>
          r.counts.deletions >> r.counts.insertions)) {
      throw Error(fmt::format("{}:{}: malformed results row", path.string(), line_no));
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace mocha
