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

// Per-token boundary traces: the MoChA expected boundary of every output
// step next to the closest CTC spike carrying the same token.

#ifndef MOCHA_TRACE_HPP_
#define MOCHA_TRACE_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mocha/data.hpp"
#include "mocha/model.hpp"

namespace mocha {

inline constexpr std::size_t kRawFrameMs = 10;

struct TraceRecord {
  std::size_t index = 0;             // 1-based output step
  std::string token;                 // symbol id or "eos"
  std::size_t mocha_frame = 0;       // rounded expected boundary, 1-based
  std::optional<std::size_t> ctc_frame;
  std::optional<long long> gap;      // mocha_frame - ctc_frame
  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct AlignmentTrace {
  std::string id;
  std::size_t frames = 0;    // encoder frames T
  std::size_t frame_ms = 0;  // duration of one encoder frame
  std::vector<TraceRecord> records;
  friend bool operator==(const AlignmentTrace&, const AlignmentTrace&) = default;
};

// Teacher-forced boundaries and greedy CTC spikes for one utterance. The
// eos record is matched to frame T.
AlignmentTrace build_alignment_trace(const Model& model, const Utterance& utt,
                                     const EncoderMode& mode);

std::string format_traces(std::span<const AlignmentTrace> traces);
// Throws Error on malformed rows or frames outside [1, T].
std::vector<AlignmentTrace> parse_traces(std::string_view text);
void write_traces(const std::filesystem::path& path, std::span<const AlignmentTrace> traces);

// Mean |gap| over matched records; unmatched records are skipped.
double mean_abs_gap(std::span<const AlignmentTrace> traces);

}  // namespace mocha

#endif  // MOCHA_TRACE_HPP_
