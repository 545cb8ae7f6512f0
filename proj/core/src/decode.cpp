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

#include "mocha/decode.hpp"

#include <algorithm>
#include <numeric>

#include "mocha/attention.hpp"

namespace mocha {
namespace {

struct LiveHypothesis {
  Hypothesis hyp;
  DecoderCarry carry;
  std::size_t prev_token = kEos;
  std::size_t prev_boundary = 1;
};

// Token indices sorted by log-probability, ties to the lower index.
std::vector<std::size_t> ranked_tokens(const std::vector<double>& log_probs, std::size_t k) {
  std::vector<std::size_t> idx(log_probs.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return log_probs[a] > log_probs[b] || (log_probs[a] == log_probs[b] && a < b);
                    });
  idx.resize(k);
  return idx;
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

double Hypothesis::normalized_score() const {
  return score / static_cast<double>(std::max<std::size_t>(1, steps()));
}

std::size_t effective_max_len(std::size_t max_len, std::size_t frames) {
  return max_len == 0 ? frames + 1 : max_len;
}

Hypothesis greedy_decode(const Model& model, const Tensor& memories, std::size_t max_len,
                         DecodeStats* stats) {
  StreamingEnergyCache cache(model.monotonic, model.chunk, memories);
  const std::size_t limit = effective_max_len(max_len, memories.rows());
  Hypothesis hyp;
  DecoderCarry carry = initial_carry(model);
  std::size_t prev_token = kEos;
  std::size_t prev_boundary = 1;
  for (std::size_t step = 0; step < limit; ++step) {
    carry = advance_decoder(model, carry, prev_token);
    cache.prepare_state(Tensor::row(carry.h));
    StreamingStep st = streaming_decode_step(cache, prev_boundary, model.config.chunk_width);
    if (!st.boundary) break;
    carry.context = std::move(st.context);
    const std::vector<double> log_probs = output_log_probs(model, carry.h, carry.context);
    const std::size_t token = argmax(log_probs);
    hyp.score += log_probs[token];
    hyp.boundaries.positions.push_back(*st.boundary);
    prev_boundary = *st.boundary;
    if (token == kEos) {
      hyp.ended_with_eos = true;
      break;
    }
    hyp.tokens.push_back(token);
    prev_token = token;
  }
  if (stats != nullptr) {
    stats->monotonic_evaluations = cache.monotonic_evaluations();
    stats->chunk_evaluations = cache.chunk_evaluations();
    stats->frames = memories.rows();
  }
  return hyp;
}

std::vector<Hypothesis> beam_search(const Model& model, const Tensor& memories, std::size_t beam,
                                    std::size_t max_len, bool normalize) {
  if (beam == 0) throw Error("beam width must be >= 1");
  StreamingEnergyCache cache(model.monotonic, model.chunk, memories);
  const std::size_t limit = effective_max_len(max_len, memories.rows());

  std::vector<Hypothesis> finished;
  std::vector<LiveHypothesis> live(1);
  live.front().carry = initial_carry(model);
  for (std::size_t step = 0; step < limit && !live.empty(); ++step) {
    std::vector<LiveHypothesis> candidates;
    for (const LiveHypothesis& parent : live) {
      DecoderCarry carry = advance_decoder(model, parent.carry, parent.prev_token);
      cache.prepare_state(Tensor::row(carry.h));
      StreamingStep st = streaming_decode_step(cache, parent.prev_boundary,
                                               model.config.chunk_width);
      if (!st.boundary) {
        finished.push_back(parent.hyp);
        continue;
      }
      carry.context = std::move(st.context);
      const std::vector<double> log_probs = output_log_probs(model, carry.h, carry.context);
      for (std::size_t token : ranked_tokens(log_probs, beam)) {
        LiveHypothesis child{parent.hyp, carry, token, *st.boundary};
        child.hyp.score += log_probs[token];
        child.hyp.boundaries.positions.push_back(*st.boundary);
        if (token == kEos) {
          child.hyp.ended_with_eos = true;
        } else {
          child.hyp.tokens.push_back(token);
        }
        candidates.push_back(std::move(child));
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const LiveHypothesis& a, const LiveHypothesis& b) {
                       return a.hyp.score > b.hyp.score;
                     });
    if (candidates.size() > beam) candidates.resize(beam);
    live.clear();
    for (LiveHypothesis& c : candidates) {
      if (c.hyp.ended_with_eos) {
        finished.push_back(std::move(c.hyp));
      } else {
        live.push_back(std::move(c));
      }
    }
  }
  for (LiveHypothesis& l : live) finished.push_back(std::move(l.hyp));

  std::stable_sort(finished.begin(), finished.end(),
                   [normalize](const Hypothesis& a, const Hypothesis& b) {
                     return normalize ? a.normalized_score() > b.normalized_score()
                                      : a.score > b.score;
                   });
  return finished;
}

Hypothesis beam_decode(const Model& model, const Tensor& memories, std::size_t beam,
                       std::size_t max_len) {
  std::vector<Hypothesis> nbest = beam_search(model, memories, beam, max_len);
  return nbest.empty() ? Hypothesis{} : std::move(nbest.front());
}

Hypothesis hard_offline_decode(const Model& model, const Tensor& memories, std::size_t max_len) {
  const std::size_t t = memories.rows();
  const std::size_t limit = effective_max_len(max_len, t);
  Model& params = const_cast<Model&>(model);  // read through an untracked graph
  Hypothesis hyp;
  DecoderCarry carry = initial_carry(model);
  std::size_t prev_token = kEos;
  std::size_t prev_boundary = 1;
  for (std::size_t step = 0; step < limit; ++step) {
    carry = advance_decoder(model, carry, prev_token);
    const Tensor state = Tensor::row(carry.h);
    const EnergyRow row = monotonic_energy(memories, state, model.monotonic);
    const auto boundary = first_boundary(row.p.storage(), prev_boundary);
    if (!boundary) break;

    Graph g(/*track_gradients=*/false);
    const Var mem = g.constant(memories);
    const Tensor u = ChunkEnergy(g, params.chunk, mem).energy(g.constant(state)).value();
    Tensor hard = Tensor::matrix(1, t);
    hard[*boundary - 1] = 1.0;
    const Tensor beta = chunkwise_attention(hard, u, model.config.chunk_width);
    carry.context.assign(memories.cols(), 0.0);
    for (std::size_t j = 0; j < t; ++j) {
      if (beta[j] == 0.0) continue;
      const auto h = memories.row_span(j);
      for (std::size_t d = 0; d < h.size(); ++d) carry.context[d] += beta[j] * h[d];
    }

    const std::vector<double> log_probs = output_log_probs(model, carry.h, carry.context);
    const std::size_t token = argmax(log_probs);
    hyp.score += log_probs[token];
    hyp.boundaries.positions.push_back(*boundary);
    prev_boundary = *boundary;
    if (token == kEos) {
      hyp.ended_with_eos = true;
      break;
    }
    hyp.tokens.push_back(token);
    prev_token = token;
  }
  return hyp;
}

}  // namespace mocha
