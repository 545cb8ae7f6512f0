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

#ifndef MOCHA_ENCODER_HPP_
#define MOCHA_ENCODER_HPP_

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mocha/autograd.hpp"
#include "mocha/numerics.hpp"
#include "mocha/tensor.hpp"

namespace mocha {

// Latency-controlled chunking. `n_c` central frames are emitted per chunk
// and the backward direction additionally sees `n_r` lookahead frames.
struct ChunkConfig {
  static constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

  std::size_t n_c = kUnbounded;
  std::size_t n_r = 0;

  static ChunkConfig offline() { return {}; }
  bool is_offline() const { return n_c == kUnbounded; }

  // Raw-frame chunk sizes mapped onto the subsampled time axis by integer
  // division; n_c never drops below 1.
  ChunkConfig subsampled(std::size_t factor) const;
};

struct ChunkSpan {
  std::size_t begin = 0;      // first emitted frame (0-based)
  std::size_t end = 0;        // one past the last emitted frame
  std::size_t window_end = 0; // one past the last lookahead frame
};

// Chunk boundaries for a sequence of `frames` frames. Throws if n_c == 0.
std::vector<ChunkSpan> chunk_schedule(std::size_t frames, ChunkConfig cfg);

// Stack-and-skip frame-rate reduction: output frame t concatenates input
// frames [t*factor, (t+1)*factor), zero-padding past the end.
Tensor subsample(const Tensor& features, std::size_t factor);

struct LstmWeights {
  Tensor w_x;  // in x 4H, gate order (i, f, g, o)
  Tensor w_h;  // H x 4H
  Tensor b;    // 1 x 4H

  std::size_t input_dim() const { return w_x.rows(); }
  std::size_t hidden() const { return w_h.rows(); }

  static LstmWeights zeros(std::size_t input_dim, std::size_t hidden);
  // Uniform(+-1/sqrt(H)) weights, forget-gate bias 1.
  static LstmWeights random(std::size_t input_dim, std::size_t hidden, Rng& rng);
};

struct LstmState {
  Var h;  // 1 x H
  Var c;  // 1 x H
};

LstmState zero_state(Graph& g, std::size_t hidden);

struct LstmOutput {
  Var outputs;  // T x H, in input time order
  LstmState state;
};

// Runs the recurrence over `frames` (T x in) from `state`. With `reverse`
// the frames are consumed last-to-first; outputs stay in input order.
LstmOutput lstm_forward(Graph& g, LstmWeights& w, Var frames, LstmState state,
                        bool reverse = false);

enum class EncoderKind { kLstm, kBlstm, kLcBlstm };

EncoderKind parse_encoder_kind(std::string_view name);
std::string_view to_string(EncoderKind kind);

struct EncoderLayer {
  LstmWeights forward;
  LstmWeights backward;  // unused for kLstm
};

struct EncoderOutput {
  Var memories;            // T x d
  std::size_t length = 0;  // valid frames
};

// Bidirectional layers evaluated chunk by chunk. The forward direction
// carries its state from chunk to chunk; the backward direction restarts
// from zeros over each chunk's n_c + n_r window. Directions are summed and
// only the central frames are emitted. ChunkConfig::offline() gives the
// plain bidirectional pass.
EncoderOutput lc_blstm_forward(Graph& g, std::span<EncoderLayer> layers, Var frames,
                               ChunkConfig cfg, double dropout = 0.0, Rng* rng = nullptr);

// Stacked unidirectional LSTM (forward weights of each layer only).
EncoderOutput lstm_encoder_forward(Graph& g, std::span<EncoderLayer> layers, Var frames,
                                   double dropout = 0.0, Rng* rng = nullptr);

}  // namespace mocha

#endif  // MOCHA_ENCODER_HPP_
