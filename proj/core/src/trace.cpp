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

#include "mocha/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "mocha/ctc.hpp"

namespace mocha {
namespace {

constexpr const char* kTraceHeader =
    "utt\tframes\tframe_ms\tindex\ttoken\tmocha_frame\tctc_spike_frame\tgap";
constexpr const char* kMissing = "NA";

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) out.push_back(field);
  return out;
}

template <typename T>
T parse_field(const std::string& text, std::size_t line_no, const char* what) {
  std::istringstream in(text);
  T value{};
  if (!(in >> value) || !in.eof()) {
    throw Error(fmt::format("trace line {}: bad {} '{}'", line_no, what, text));
  }
  return value;
}

}  // namespace

AlignmentTrace build_alignment_trace(const Model& model, const Utterance& utt,
                                     const EncoderMode& mode) {
  Graph g(/*track_gradients=*/false);
  Model& params = const_cast<Model&>(model);  // read through an untracked graph
  ForwardOptions options;
  options.encoder = mode;
  const UtteranceForward fwd = forward_utterance(g, params, utt.features, utt.labels, options);
  const Tensor log_post =
      ctc_log_posterior_values(model, encode_values(model, utt.features, mode));
  const std::vector<Spike> spikes = ctc_greedy_spikes(log_post);

  AlignmentTrace trace;
  trace.id = utt.id;
  trace.frames = fwd.frames;
  trace.frame_ms = kRawFrameMs * model.config.subsample;
  const auto t = static_cast<double>(fwd.frames);
  for (std::size_t i = 0; i < fwd.b_mocha.size(); ++i) {
    TraceRecord rec;
    rec.index = i + 1;
    const bool eos = i == utt.labels.size();
    rec.token = eos ? "eos" : std::to_string(utt.labels[i]);
    rec.mocha_frame = static_cast<std::size_t>(std::clamp(std::round(fwd.b_mocha[i]), 1.0, t));
    if (eos) {
      rec.ctc_frame = fwd.frames;
    } else {
      for (const Spike& s : spikes) {
        if (s.token != utt.labels[i]) continue;
        const auto dist = [&](std::size_t f) {
          return f > rec.mocha_frame ? f - rec.mocha_frame : rec.mocha_frame - f;
        };
        if (!rec.ctc_frame || dist(s.frame) < dist(*rec.ctc_frame)) rec.ctc_frame = s.frame;
      }
    }
    if (rec.ctc_frame) {
      rec.gap = static_cast<long long>(rec.mocha_frame) - static_cast<long long>(*rec.ctc_frame);
    }
    trace.records.push_back(std::move(rec));
  }
  return trace;
}

std::string format_traces(std::span<const AlignmentTrace> traces) {
  std::string out = kTraceHeader;
  out += '\n';
  for (const AlignmentTrace& tr : traces) {
    for (const TraceRecord& r : tr.records) {
      out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", tr.id, tr.frames, tr.frame_ms, r.index,
                         r.token, r.mocha_frame,
                         r.ctc_frame ? std::to_string(*r.ctc_frame) : kMissing,
                         r.gap ? std::to_string(*r.gap) : kMissing);
    }
  }
  return out;
}

std::vector<AlignmentTrace> parse_traces(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw Error("trace: missing header line");
  std::vector<AlignmentTrace> traces;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 8) {
      throw Error(fmt::format("trace line {}: expected 8 fields, found {}", line_no, f.size()));
    }
    const auto frames = parse_field<std::size_t>(f[1], line_no, "frame count");
    const auto frame_ms = parse_field<std::size_t>(f[2], line_no, "frame duration");
    if (traces.empty() || traces.back().id != f[0]) {
      traces.push_back({f[0], frames, frame_ms, {}});
    } else if (traces.back().frames != frames || traces.back().frame_ms != frame_ms) {
      throw Error(fmt::format("trace line {}: metadata changes within '{}'", line_no, f[0]));
    }
    TraceRecord r;
    r.index = parse_field<std::size_t>(f[3], line_no, "index");
    r.token = f[4];
    r.mocha_frame = parse_field<std::size_t>(f[5], line_no, "mocha frame");
    if (f[6] != kMissing) r.ctc_frame = parse_field<std::size_t>(f[6], line_no, "ctc frame");
    if (f[7] != kMissing) r.gap = parse_field<long long>(f[7], line_no, "gap");
    auto in_range = [frames](std::size_t v) { return v >= 1 && v <= frames; };
    if (!in_range(r.mocha_frame) || (r.ctc_frame && !in_range(*r.ctc_frame))) {
      throw Error(fmt::format("trace line {}: frame index outside [1, {}]", line_no, frames));
    }
    traces.back().records.push_back(std::move(r));
  }
  return traces;
}

void write_traces(const std::filesystem::path& path, std::span<const AlignmentTrace> traces) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write trace {}", path.string()));
  out << format_traces(traces);
}

double mean_abs_gap(std::span<const AlignmentTrace> traces) {
  double acc = 0.0;
  std::size_t n = 0;
  for (const AlignmentTrace& tr : traces) {
    for (const TraceRecord& r : tr.records) {
      if (!r.gap) continue;
      acc += std::abs(static_cast<double>(*r.gap));
      ++n;
    }
  }
  return n == 0 ? 0.0 : acc / static_cast<double>(n);
}

}  // namespace mocha
