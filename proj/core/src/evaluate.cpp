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

#include "mocha/evaluate.hpp"

#include <cmath>

namespace mocha {

std::vector<DecodedUtterance> decode_corpus(const Model& model, std::span<const Utterance> data,
                                            const EncoderMode& mode, std::size_t beam) {
  std::vector<DecodedUtterance> out;
  out.reserve(data.size());
  for (const Utterance& utt : data) {
    DecodedUtterance d;
    const Tensor memories = encode_values(model, utt.features, mode);
    d.best = beam <= 1 ? greedy_decode(model, memories, 0, &d.stats)
                       : beam_decode(model, memories, beam);
    d.reference = utt.labels;
    d.score.id = utt.id;
    d.score.frames = utt.features.rows();
    d.score.counts = word_error_rate(d.best.tokens, utt.labels);
    out.push_back(std::move(d));
  }
  return out;
}

double token_accuracy(std::span<const DecodedUtterance> decoded) {
  std::vector<UtteranceScore> scores;
  for (const DecodedUtterance& d : decoded) scores.push_back(d.score);
  return 1.0 - corpus_wer(scores);
}

double sequence_accuracy(std::span<const DecodedUtterance> decoded) {
  if (decoded.empty()) return 0.0;
  std::size_t exact = 0;
  for (const DecodedUtterance& d : decoded) exact += d.best.tokens == d.reference ? 1 : 0;
  return static_cast<double>(exact) / static_cast<double>(decoded.size());
}

AlignmentStats teacher_forced_stats(const Model& model, std::span<const Utterance> data,
                                    const EncoderMode& mode, const LossWeights& weights,
                                    double label_smoothing) {
  AlignmentStats stats;
  if (data.empty()) return stats;
  Model& params = const_cast<Model&>(model);  // read through untracked graphs
  ForwardOptions options;
  options.encoder = mode;
  options.weights = weights;
  options.label_smoothing = label_smoothing;
  double gap = 0.0;
  double mass = 0.0;
  std::size_t steps = 0;
  for (const Utterance& utt : data) {
    Graph g(/*track_gradients=*/false);
    const UtteranceForward fwd = forward_utterance(g, params, utt.features, utt.labels, options);
    for (std::size_t i = 0; i < fwd.b_mocha.size(); ++i) {
      gap += std::abs(static_cast<double>(fwd.b_ctc.positions[i]) - fwd.b_mocha[i]);
      double row = 0.0;
      for (double a : fwd.alpha.row_span(i)) row += a;
      mass += std::abs(row - 1.0);
      ++steps;
    }
    stats.mean_loss.mocha_nll += fwd.parts.mocha_nll;
    stats.mean_loss.ctc += fwd.parts.ctc;
    stats.mean_loss.quantity += fwd.parts.quantity;
    stats.mean_loss.sync += fwd.parts.sync;
    stats.mean_loss.total += fwd.parts.total;
  }
  const auto n = static_cast<double>(data.size());
  stats.mean_loss.mocha_nll /= n;
  stats.mean_loss.ctc /= n;
  stats.mean_loss.quantity /= n;
  stats.mean_loss.sync /= n;
  stats.mean_loss.total /= n;
  stats.mean_sync_gap = gap / static_cast<double>(steps);
  stats.mean_mass_deviation = mass / static_cast<double>(steps);
  return stats;
}

}  // namespace mocha
