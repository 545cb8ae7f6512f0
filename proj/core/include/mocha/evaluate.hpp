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

// Corpus-level evaluation shared by the CLI, the tests and the acceptance
// suite.

#ifndef MOCHA_EVALUATE_HPP_
#define MOCHA_EVALUATE_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mocha/data.hpp"
#include "mocha/decode.hpp"
#include "mocha/metrics.hpp"
#include "mocha/model.hpp"

namespace mocha {

struct DecodedUtterance {
  Hypothesis best;
  DecodeStats stats;  // filled for greedy decodes
  UtteranceScore score;
  std::vector<std::size_t> reference;
};

// beam == 1 runs greedy_decode; larger beams run beam_decode.
std::vector<DecodedUtterance> decode_corpus(const Model& model, std::span<const Utterance> data,
                                            const EncoderMode& mode, std::size_t beam);

// 1 - corpus WER.
double token_accuracy(std::span<const DecodedUtterance> decoded);
// Fraction of exact matches.
double sequence_accuracy(std::span<const DecodedUtterance> decoded);

struct AlignmentStats {
  double mean_sync_gap = 0.0;        // mean over steps of |b_ctc - b_mocha|
  double mean_mass_deviation = 0.0;  // mean over steps of |sum_j alpha - 1|
  LossBreakdown mean_loss;           // per-utterance average
};

// Teacher-forced pass over `data` without masking or dropout.
AlignmentStats teacher_forced_stats(const Model& model, std::span<const Utterance> data,
                                    const EncoderMode& mode, const LossWeights& weights,
                                    double label_smoothing = kDefaultLabelSmoothing);

}  // namespace mocha

#endif  // MOCHA_EVALUATE_HPP_
