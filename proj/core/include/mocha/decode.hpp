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

// Streaming MoChA search.
//
// Every hypothesis advances by one decoder step at a time: the monotonic
// scan resumes at the hypothesis' previous boundary, the first frame with
// p > 0.5 becomes the next boundary, and chunkwise attention over the w
// frames ending there gives the context. A scan that exhausts the memories
// ends the hypothesis without an end-of-sentence token.

#ifndef MOCHA_DECODE_HPP_
#define MOCHA_DECODE_HPP_

#include <cstddef>
#include <vector>

#include "mocha/ctc.hpp"
#include "mocha/model.hpp"
#include "mocha/tensor.hpp"

namespace mocha {

inline constexpr std::size_t kDefaultBeam = 10;

struct Hypothesis {
  std::vector<std::size_t> tokens;  // symbols, no eos
  double score = 0.0;               // summed log-probabilities of every emitted step
  BoundarySeq boundaries;           // one per emitted step, eos included
  bool ended_with_eos = false;

  std::size_t steps() const { return boundaries.positions.size(); }
  // score / emitted steps (eos counted), at least one step.
  double normalized_score() const;
  friend bool operator==(const Hypothesis&, const Hypothesis&) = default;
};

struct DecodeStats {
  std::size_t monotonic_evaluations = 0;
  std::size_t chunk_evaluations = 0;
  std::size_t frames = 0;
};

// Default step limit: T + 1 (no boundary may precede the previous one and
// each frame holds few tokens on the toy task). Zero means "use default".
std::size_t effective_max_len(std::size_t max_len, std::size_t frames);

Hypothesis greedy_decode(const Model& model, const Tensor& memories, std::size_t max_len = 0,
                         DecodeStats* stats = nullptr);

// N-best list from a beam search. Hypotheses are pruned by raw score and
// the returned list is ranked by normalized_score() when `normalize` is
// set, by raw score otherwise.
std::vector<Hypothesis> beam_search(const Model& model, const Tensor& memories, std::size_t beam,
                                    std::size_t max_len = 0, bool normalize = true);
Hypothesis beam_decode(const Model& model, const Tensor& memories, std::size_t beam,
                       std::size_t max_len = 0);

// Greedy decode that evaluates every frame's selection probability up
// front and places a one-hot alignment at the first frame over 0.5; the
// reference for the streaming search.
Hypothesis hard_offline_decode(const Model& model, const Tensor& memories,
                               std::size_t max_len = 0);

}  // namespace mocha

#endif  // MOCHA_DECODE_HPP_
