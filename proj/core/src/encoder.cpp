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

#include "mocha/encoder.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace mocha {

ChunkConfig ChunkConfig::subsampled(std::size_t factor) const {
  if (factor == 0) throw Error("subsampling factor must be >= 1");
  ChunkConfig out;
  out.n_c = is_offline() ? kUnbounded : std::max<std::size_t>(1, n_c / factor);
  out.n_r = n_r / factor;
  return out;
}

std::vector<ChunkSpan> chunk_schedule(std::size_t frames, ChunkConfig cfg) {
  if (cfg.n_c == 0) throw Error("chunk size n_c must be >= 1");
  std::vector<ChunkSpan> spans;
  for (std::size_t begin = 0; begin < frames;) {
    const std::size_t end = cfg.is_offline() ? frames : std::min(frames, begin + cfg.n_c);
    const std::size_t window_end =
        cfg.n_r >= frames - end ? frames : end + cfg.n_r;
    spans.push_back({begin, end, window_end});
    begin = end;
  }
  return spans;
}

Tensor subsample(const Tensor& features, std::size_t factor) {
  if (factor == 0) throw Error("subsample: factor must be >= 1");
  if (factor == 1) return Tensor({features.rows(), features.cols()}, features.storage());
  const std::size_t t0 = features.rows();
  const std::size_t f = features.cols();
  const std::size_t t = (t0 + factor - 1) / factor;
  Tensor out = Tensor::matrix(t, f * factor);
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t k = 0; k < factor; ++k) {
      const std::size_t src = i * factor + k;
      if (src >= t0) break;
      for (std::size_t d = 0; d < f; ++d) out.at(i, k * f + d) = features.at(src, d);
    }
  }
  return out;
}

LstmWeights LstmWeights::zeros(std::size_t input_dim, std::size_t hidden) {
  return {Tensor::matrix(input_dim, 4 * hidden), Tensor::matrix(hidden, 4 * hidden),
          Tensor::matrix(1, 4 * hidden)};
}

LstmWeights LstmWeights::random(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  LstmWeights w = zeros(input_dim, hidden);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  init_uniform(w.w_x, bound, rng);
  init_uniform(w.w_h, bound, rng);
  init_uniform(w.b, bound, rng);
  for (std::size_t k = hidden; k < 2 * hidden; ++k) w.b[k] = 1.0;
  return w;
}

LstmState zero_state(Graph& g, std::size_t hidden) {
  return {g.constant(Tensor::matrix(1, hidden)), g.constant(Tensor::matrix(1, hidden))};
}

LstmOutput lstm_forward(Graph& g, LstmWeights& w, Var frames, LstmState state, bool reverse) {
  const std::size_t hidden = w.hidden();
  if (frames.cols() != w.input_dim()) {
    throw Error(fmt::format("lstm_forward: frames have {} features, layer expects {}",
                            frames.cols(), w.input_dim()));
  }
  if (state.h.cols() != hidden || state.c.cols() != hidden) {
    throw Error(fmt::format("lstm_forward: state width {} does not match hidden size {}",
                            state.h.cols(), hidden));
  }
  const std::size_t t = frames.rows();
  if (t == 0) return {g.constant(Tensor::matrix(0, hidden)), state};

  const Var projected = add_row(matmul(frames, g.param(w.w_x)), g.param(w.b));
  const Var w_h = g.param(w.w_h);
  std::vector<Var> outputs(t);
  for (std::size_t step = 0; step < t; ++step) {
    const std::size_t idx = reverse ? t - 1 - step : step;
    const Var gates = add(slice_rows(projected, idx, 1), matmul(state.h, w_h));
    const Var hc = lstm_cell(gates, state.c);
    state.h = slice_cols(hc, 0, hidden);
    state.c = slice_cols(hc, hidden, hidden);
    outputs[idx] = state.h;
  }
  return {concat_rows(outputs), state};
}

EncoderKind parse_encoder_kind(std::string_view name) {
  if (name == "lstm") return EncoderKind::kLstm;
  if (name == "blstm") return EncoderKind::kBlstm;
  if (name == "lcblstm") return EncoderKind::kLcBlstm;
  throw Error(fmt::format("unknown encoder kind '{}' (expected lstm, blstm or lcblstm)", name));
}

std::string_view to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::kLstm:
      return "lstm";
    case EncoderKind::kBlstm:
      return "blstm";
    case EncoderKind::kLcBlstm:
      return "lcblstm";
  }
  return "?";
}

EncoderOutput lc_blstm_forward(Graph& g, std::span<EncoderLayer> layers, Var frames,
                               ChunkConfig cfg, double dropout, Rng* rng) {
  if (layers.empty()) throw Error("encoder has no layers");
  const std::size_t t = frames.rows();
  if (t == 0) throw Error("lc_blstm_forward: empty input");

  std::vector<LstmState> carried;
  carried.reserve(layers.size());
  for (const EncoderLayer& layer : layers) carried.push_back(zero_state(g, layer.forward.hidden()));

  std::vector<Var> emitted;
  for (const ChunkSpan& span : chunk_schedule(t, cfg)) {
    const std::size_t central = span.end - span.begin;
    const std::size_t lookahead = span.window_end - span.end;
    Var x = slice_rows(frames, span.begin, span.window_end - span.begin);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      EncoderLayer& layer = layers[l];
      LstmOutput fwd = lstm_forward(g, layer.forward, slice_rows(x, 0, central), carried[l]);
      carried[l] = fwd.state;
      Var fwd_all = fwd.outputs;
      if (lookahead > 0) {
        // Lookahead frames see the carried state but never feed it forward.
        LstmOutput ahead =
            lstm_forward(g, layer.forward, slice_rows(x, central, lookahead), fwd.state);
        const Var parts[] = {fwd.outputs, ahead.outputs};
        fwd_all = concat_rows(parts);
      }
      LstmOutput bwd = lstm_forward(g, layer.backward, x,
                                    zero_state(g, layer.backward.hidden()), /*reverse=*/true);
      x = add(fwd_all, bwd.outputs);
      if (rng != nullptr) x = mocha::dropout(x, dropout, *rng);
    }
    emitted.push_back(lookahead > 0 ? slice_rows(x, 0, central) : x);
  }
  const Var memories = emitted.size() == 1 ? emitted.front() : concat_rows(emitted);
  return {memories, t};
}

EncoderOutput lstm_encoder_forward(Graph& g, std::span<EncoderLayer> layers, Var frames,
                                   double dropout, Rng* rng) {
  if (layers.empty()) throw Error("encoder has no layers");
  if (frames.rows() == 0) throw Error("lstm_encoder_forward: empty input");
  Var x = frames;
  for (EncoderLayer& layer : layers) {
    x = lstm_forward(g, layer.forward, x, zero_state(g, layer.forward.hidden())).outputs;
    if (rng != nullptr) x = mocha::dropout(x, dropout, *rng);
  }
  return {x, frames.rows()};
}

}  // namespace mocha
