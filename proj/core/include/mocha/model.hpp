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

// Joint CTC / MoChA sequence model.
//
// features -> frame stacking -> encoder -> memories (T x H)
//   memories -> CTC head (T x V log-posteriors)
//   memories -> MoChA decoder: LSTM over [embed(y_{i-1}); c_{i-1}], monotonic
//               and chunk energies against the new state, context c_i, then
//               tanh(W_o [s_i; c_i] + b_o) -> W_y -> log-softmax.
//
// Token ids: 0 is the CTC blank, 1 is end-of-sentence (also the start
// symbol fed at step 1), symbols start at 2.

#ifndef MOCHA_MODEL_HPP_
#define MOCHA_MODEL_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mocha/attention.hpp"
#include "mocha/autograd.hpp"
#include "mocha/ctc.hpp"
#include "mocha/encoder.hpp"
#include "mocha/numerics.hpp"
#include "mocha/objectives.hpp"
#include "mocha/tensor.hpp"

namespace mocha {

inline constexpr std::size_t kEos = 1;
inline constexpr std::size_t kFirstSymbol = 2;

struct ModelConfig {
  std::size_t feature_dim = 8;
  std::size_t subsample = 4;
  std::size_t encoder_layers = 1;
  std::size_t encoder_hidden = 24;
  std::size_t vocab_size = 8;  // blank + eos + symbols
  std::size_t embed_dim = 8;
  std::size_t decoder_hidden = 24;
  std::size_t attention_dim = 16;
  std::size_t chunk_width = kDefaultChunkWidth;
  double energy_offset = kDefaultEnergyOffset;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Encoder topology plus chunking in raw (pre-stacking) frames.
struct EncoderMode {
  EncoderKind kind = EncoderKind::kBlstm;
  ChunkConfig chunk = ChunkConfig::offline();
};

struct Model {
  ModelConfig config;
  std::vector<EncoderLayer> encoder;
  Tensor ctc_w;      // H x V
  Tensor ctc_b;      // 1 x V
  Tensor embedding;  // V x E
  LstmWeights decoder;
  MonotonicEnergyParams monotonic;
  ChunkEnergyParams chunk;
  Tensor out_w;   // (S + H) x S
  Tensor out_b;   // 1 x S
  Tensor proj_w;  // S x V
  Tensor proj_b;  // 1 x V

  static Model random(const ModelConfig& config, Rng& rng);
  // Stable order; names are unique.
  std::vector<NamedParam> parameters();
  std::size_t parameter_count();
};

struct ForwardOptions {
  EncoderMode encoder;
  LossWeights weights;
  double label_smoothing = kDefaultLabelSmoothing;
  double dropout = 0.0;
  // Standard deviation of Gaussian noise added to monotonic energies
  // before the sigmoid.
  double energy_noise = 0.0;
  Rng* rng = nullptr;  // source for dropout and energy noise; null disables both
};

struct UtteranceForward {
  LossBreakdown parts;
  Var total;
  Tensor alpha;                 // (U + 1) x T, eos row last
  std::vector<double> b_mocha;  // U + 1
  BoundarySeq b_ctc;            // U + 1, eos at T
  std::size_t frames = 0;       // T after stacking
};

// Encoder memories for one utterance.
Var encode(Graph& g, Model& model, const Tensor& features, const EncoderMode& mode,
           double dropout = 0.0, Rng* rng = nullptr);

// CTC log-posteriors (T x V) from memories.
Var ctc_log_posteriors(Graph& g, Model& model, Var memories);

// Teacher-forced pass computing every loss term. The CTC reference
// boundaries come from a fresh forced alignment of this pass's posteriors.
UtteranceForward forward_utterance(Graph& g, Model& model, const Tensor& features,
                                   std::span<const std::size_t> labels,
                                   const ForwardOptions& options);

// Value-only encoder pass; never records gradients.
Tensor encode_values(const Model& model, const Tensor& features, const EncoderMode& mode);
Tensor ctc_log_posterior_values(const Model& model, const Tensor& memories);

// Decoder carry used by the search routines.
struct DecoderCarry {
  std::vector<double> h;
  std::vector<double> c;
  std::vector<double> context;
};

DecoderCarry initial_carry(const Model& model);
// Feeds `token` (the previous output) and returns the updated LSTM state;
// the context is carried unchanged until the caller replaces it.
DecoderCarry advance_decoder(const Model& model, const DecoderCarry& carry, std::size_t token);
// Output log-distribution over the vocabulary for state h and context c.
std::vector<double> output_log_probs(const Model& model, std::span<const double> h,
                                     std::span<const double> context);

}  // namespace mocha

#endif  // MOCHA_MODEL_HPP_
