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

// Connectionist temporal classification over a blank-interleaved label
// sequence l' = (blank, l1, blank, l2, ..., lU, blank). The forward and
// best-path recursions share one trellis walker parameterized by the
// reducer (log-add or max).

#ifndef MOCHA_CTC_HPP_
#define MOCHA_CTC_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "mocha/autograd.hpp"
#include "mocha/tensor.hpp"

namespace mocha {

inline constexpr std::size_t kBlank = 0;

class CtcInfeasibleError : public Error {
 public:
  using Error::Error;
};

struct CtcLattice {
  Tensor log_alpha;  // T x (2U+1)
  Tensor log_beta;   // T x (2U+1)
  std::vector<std::size_t> extended_labels;
  double log_likelihood = 0.0;
};

struct CtcResult {
  double loss = 0.0;  // -log_likelihood
  CtcLattice lattice;
};

// 1-based frame positions.
struct BoundarySeq {
  std::vector<std::size_t> positions;
  friend bool operator==(const BoundarySeq&, const BoundarySeq&) = default;
};

struct Spike {
  std::size_t frame = 0;  // 1-based
  std::size_t token = 0;
  friend bool operator==(const Spike&, const Spike&) = default;
};

std::vector<std::size_t> extend_labels(std::span<const std::size_t> labels,
                                       std::size_t blank = kBlank);

// Shortest feasible path length: U plus one blank per adjacent repeat.
std::size_t ctc_min_frames(std::span<const std::size_t> labels);

// Forward-backward over log_posteriors (T x V). Throws CtcInfeasibleError
// when T is shorter than ctc_min_frames(labels).
CtcResult ctc_loss(const Tensor& log_posteriors, std::span<const std::size_t> labels,
                   std::size_t blank = kBlank);

// d loss / d log_posteriors from a completed forward-backward.
Tensor ctc_loss_gradient(const Tensor& log_posteriors, const CtcResult& result,
                         std::size_t blank = kBlank);

// Differentiable form: 1 x 1 loss.
Var ctc_loss(Var log_posteriors, std::span<const std::size_t> labels, std::size_t blank = kBlank);

// Most probable path (length T, symbols incl. blanks) among those that
// collapse to `labels`. On ties the predecessor that keeps the earlier
// emission wins: stay over advance-by-one over skip.
std::vector<std::size_t> ctc_forced_align(const Tensor& log_posteriors,
                                          std::span<const std::size_t> labels,
                                          std::size_t blank = kBlank);

// Sum of log_posteriors along `path`.
double path_log_probability(const Tensor& log_posteriors, std::span<const std::size_t> path);

// Repeats merged, blanks removed.
std::vector<std::size_t> ctc_collapse(std::span<const std::size_t> path, std::size_t blank = kBlank);

// First frame (1-based) of every non-blank run in `path`. With
// `append_eos` the final frame T = path.size() is added for end-of-sentence.
BoundarySeq extract_boundaries(std::span<const std::size_t> path, bool append_eos = true,
                               std::size_t blank = kBlank);

// Frames whose argmax is not blank (ties go to the lower index).
std::vector<Spike> ctc_greedy_spikes(const Tensor& log_posteriors, std::size_t blank = kBlank);

}  // namespace mocha

#endif  // MOCHA_CTC_HPP_
