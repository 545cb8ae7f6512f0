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

#include "mocha/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

namespace mocha {
namespace {

Tensor random_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Tensor t = Tensor::matrix(rows, cols);
  init_uniform(t, bound, rng);
  return t;
}

double fan_in_bound(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

// y = x W (+ b), x given as a row.
std::vector<double> affine(std::span<const double> x, const Tensor& w, const Tensor* b) {
  std::vector<double> out(w.cols(), 0.0);
  if (b != nullptr) std::copy(b->storage().begin(), b->storage().end(), out.begin());
  for (std::size_t p = 0; p < x.size(); ++p) {
    const double xp = x[p];
    if (xp == 0.0) continue;
    const auto row = w.row_span(p);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += xp * row[k];
  }
  return out;
}

void add_into(std::vector<double>& acc, const std::vector<double>& x) {
  for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += x[k];
}

}  // namespace

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw Error(fmt::format("model config: {} must be >= 1", name));
  };
  positive(feature_dim, "feature_dim");
  positive(subsample, "subsample");
  positive(encoder_layers, "encoder_layers");
  positive(encoder_hidden, "encoder_hidden");
  positive(embed_dim, "embed_dim");
  positive(decoder_hidden, "decoder_hidden");
  positive(attention_dim, "attention_dim");
  positive(chunk_width, "chunk_width");
  if (vocab_size <= kFirstSymbol) {
    throw Error(fmt::format("model config: vocab_size {} leaves no room for symbols", vocab_size));
  }
}

Model Model::random(const ModelConfig& config, Rng& rng) {
  config.validate();
  const std::size_t h = config.encoder_hidden;
  const std::size_t s = config.decoder_hidden;
  const std::size_t v = config.vocab_size;
  Model m;
  m.config = config;
  std::size_t in = config.feature_dim * config.subsample;
  for (std::size_t l = 0; l < config.encoder_layers; ++l) {
    EncoderLayer layer;
    layer.forward = LstmWeights::random(in, h, rng);
    layer.backward = LstmWeights::random(in, h, rng);
    m.encoder.push_back(std::move(layer));
    in = h;
  }
  m.ctc_w = random_matrix(h, v, fan_in_bound(h), rng);
  m.ctc_b = Tensor::matrix(1, v);
  m.embedding = random_matrix(v, config.embed_dim, 1.0, rng);
  m.decoder = LstmWeights::random(config.embed_dim + h, s, rng);
  m.monotonic =
      MonotonicEnergyParams::random(h, s, config.attention_dim, config.energy_offset, rng);
  m.chunk = ChunkEnergyParams::random(h, s, config.attention_dim, rng);
  m.out_w = random_matrix(s + h, s, fan_in_bound(s + h), rng);
  m.out_b = Tensor::matrix(1, s);
  m.proj_w = random_matrix(s, v, fan_in_bound(s), rng);
  m.proj_b = Tensor::matrix(1, v);
  return m;
}

std::vector<NamedParam> Model::parameters() {
  std::vector<NamedParam> out;
  for (std::size_t l = 0; l < encoder.size(); ++l) {
    EncoderLayer& layer = encoder[l];
    for (auto [dir, w] : {std::pair{"fwd", &layer.forward}, std::pair{"bwd", &layer.backward}}) {
      out.push_back({fmt::format("encoder.{}.{}.w_x", l, dir), &w->w_x});
      out.push_back({fmt::format("encoder.{}.{}.w_h", l, dir), &w->w_h});
      out.push_back({fmt::format("encoder.{}.{}.b", l, dir), &w->b});
    }
  }
  out.push_back({"ctc.w", &ctc_w});
  out.push_back({"ctc.b", &ctc_b});
  out.push_back({"decoder.embedding", &embedding});
  out.push_back({"decoder.lstm.w_x", &decoder.w_x});
  out.push_back({"decoder.lstm.w_h", &decoder.w_h});
  out.push_back({"decoder.lstm.b", &decoder.b});
  out.push_back({"monotonic.w_h", &monotonic.w_h});
  out.push_back({"monotonic.w_s", &monotonic.w_s});
  out.push_back({"monotonic.b", &monotonic.b});
  out.push_back({"monotonic.v", &monotonic.v});
  out.push_back({"monotonic.g", &monotonic.g});
  out.push_back({"monotonic.r", &monotonic.r});
  out.push_back({"chunk.w_h", &chunk.w_h});
  out.push_back({"chunk.w_s", &chunk.w_s});
  out.push_back({"chunk.b", &chunk.b});
  out.push_back({"chunk.v", &chunk.v});
  out.push_back({"output.w", &out_w});
  out.push_back({"output.b", &out_b});
  out.push_back({"output.proj_w", &proj_w});
  out.push_back({"output.proj_b", &proj_b});
  return out;
}

std::size_t Model::parameter_count() {
  std::size_t n = 0;
  for (const NamedParam& p : parameters()) n += p.tensor->size();
  return n;
}

Var encode(Graph& g, Model& model, const Tensor& features, const EncoderMode& mode,
           double dropout, Rng* rng) {
  if (features.cols() != model.config.feature_dim) {
    throw Error(fmt::format("features have {} dims, model expects {}", features.cols(),
                            model.config.feature_dim));
  }
  if (features.rows() == 0) throw Error("empty utterance");
  const Var frames = g.constant(subsample(features, model.config.subsample));
  switch (mode.kind) {
    case EncoderKind::kLstm:
      return lstm_encoder_forward(g, model.encoder, frames, dropout, rng).memories;
    case EncoderKind::kBlstm:
      return lc_blstm_forward(g, model.encoder, frames, ChunkConfig::offline(), dropout, rng)
          .memories;
    case EncoderKind::kLcBlstm:
      return lc_blstm_forward(g, model.encoder, frames,
                              mode.chunk.subsampled(model.config.subsample), dropout, rng)
          .memories;
  }
  throw Error("unknown encoder kind");
}

Var ctc_log_posteriors(Graph& g, Model& model, Var memories) {
  return log_softmax_rows(add_row(matmul(memories, g.param(model.ctc_w)), g.param(model.ctc_b)));
}

UtteranceForward forward_utterance(Graph& g, Model& model, const Tensor& features,
                                   std::span<const std::size_t> labels,
                                   const ForwardOptions& options) {
  const ModelConfig& cfg = model.config;
  for (std::size_t y : labels) {
    if (y < kFirstSymbol || y >= cfg.vocab_size) {
      throw Error(fmt::format("label {} is not a symbol of a vocabulary of size {}", y,
                              cfg.vocab_size));
    }
  }
  UtteranceForward out;
  Rng* dropout_rng = options.dropout > 0.0 ? options.rng : nullptr;
  const Var memories = encode(g, model, features, options.encoder, options.dropout, dropout_rng);
  const std::size_t t = memories.rows();
  out.frames = t;

  const Var ctc_lp = ctc_log_posteriors(g, model, memories);
  const Var ctc = ctc_loss(ctc_lp, labels);
  const std::vector<std::size_t> path = ctc_forced_align(ctc_lp.value(), labels);
  out.b_ctc = extract_boundaries(path, /*append_eos=*/true);

  std::vector<std::size_t> targets(labels.begin(), labels.end());
  targets.push_back(kEos);
  const std::size_t steps = targets.size();

  const MonotonicEnergy mono(g, model.monotonic, memories);
  const ChunkEnergy chunk(g, model.chunk, memories);
  const Var embedding = g.param(model.embedding);
  const Var out_w = g.param(model.out_w);
  const Var out_b = g.param(model.out_b);
  const Var proj_w = g.param(model.proj_w);
  const Var proj_b = g.param(model.proj_b);

  LstmState state = zero_state(g, cfg.decoder_hidden);
  Var context = g.constant(Tensor::matrix(1, cfg.encoder_hidden));
  Var alpha = g.constant(initial_alignment(t));
  std::vector<Var> alphas;
  std::vector<Var> logits;
  std::size_t prev = kEos;
  for (std::size_t i = 0; i < steps; ++i) {
    const Var inputs[] = {slice_rows(embedding, prev, 1), context};
    state = lstm_forward(g, model.decoder, concat_cols(inputs), state).state;
    Var energy = mono.energy(state.h);
    if (options.energy_noise > 0.0 && options.rng != nullptr) {
      Tensor noise = Tensor::matrix(1, t);
      std::normal_distribution<double> normal(0.0, options.energy_noise);
      for (std::size_t j = 0; j < t; ++j) noise[j] = normal(*options.rng);
      energy = add(energy, g.constant(std::move(noise)));
    }
    const Var p = clamp(sigmoid(energy), kProbFloor, 1.0 - kProbFloor);
    alpha = monotonic_alignment_step(alpha, p);
    const Var beta = chunkwise_attention(alpha, chunk.energy(state.h), cfg.chunk_width);
    context = matmul(beta, memories);
    const Var features_out[] = {state.h, context};
    const Var hidden = tanh(add_row(matmul(concat_cols(features_out), out_w), out_b));
    logits.push_back(add_row(matmul(hidden, proj_w), proj_b));
    alphas.push_back(alpha);
    prev = targets[i];
  }
  const Var log_probs = log_softmax_rows(concat_rows(logits));
  const Var alpha_all = concat_rows(alphas);
  const Var b_mocha = expected_boundary(alpha_all);

  const Var nll = mocha_nll(log_probs, targets, options.label_smoothing);
  const Var qua = quantity_loss(alpha_all, steps);
  const Var sync = sync_loss(out.b_ctc, b_mocha);
  out.total = total_loss(nll, ctc, qua, sync, options.weights);

  out.parts = {nll.item(), ctc.item(), qua.item(), sync.item(), out.total.item()};
  out.alpha = alpha_all.value();
  out.b_mocha = b_mocha.value().storage();
  return out;
}

Tensor encode_values(const Model& model, const Tensor& features, const EncoderMode& mode) {
  Graph g(/*track_gradients=*/false);
  // An untracked graph only reads parameters.
  return encode(g, const_cast<Model&>(model), features, mode).value();
}

Tensor ctc_log_posterior_values(const Model& model, const Tensor& memories) {
  Graph g(/*track_gradients=*/false);
  return ctc_log_posteriors(g, const_cast<Model&>(model), g.constant(memories)).value();
}

DecoderCarry initial_carry(const Model& model) {
  return {std::vector<double>(model.config.decoder_hidden, 0.0),
          std::vector<double>(model.config.decoder_hidden, 0.0),
          std::vector<double>(model.config.encoder_hidden, 0.0)};
}

DecoderCarry advance_decoder(const Model& model, const DecoderCarry& carry, std::size_t token) {
  if (token >= model.config.vocab_size) throw Error(fmt::format("token {} out of range", token));
  const auto emb = model.embedding.row_span(token);
  std::vector<double> x(emb.begin(), emb.end());
  x.insert(x.end(), carry.context.begin(), carry.context.end());

  const LstmWeights& w = model.decoder;
  const std::size_t hidden = w.hidden();
  std::vector<double> gates = affine(x, w.w_x, &w.b);
  add_into(gates, affine(carry.h, w.w_h, nullptr));

  DecoderCarry next;
  next.h.resize(hidden);
  next.c.resize(hidden);
  next.context = carry.context;
  for (std::size_t k = 0; k < hidden; ++k) {
    const double in = sigmoid(gates[k]);
    const double forget = sigmoid(gates[hidden + k]);
    const double cand = std::tanh(gates[2 * hidden + k]);
    const double out = sigmoid(gates[3 * hidden + k]);
    next.c[k] = forget * carry.c[k] + in * cand;
    next.h[k] = out * std::tanh(next.c[k]);
  }
  return next;
}

std::vector<double> output_log_probs(const Model& model, std::span<const double> h,
                                     std::span<const double> context) {
  std::vector<double> x(h.begin(), h.end());
  x.insert(x.end(), context.begin(), context.end());
  std::vector<double> hidden = affine(x, model.out_w, &model.out_b);
  for (double& v : hidden) v = std::tanh(v);
  std::vector<double> logits = affine(hidden, model.proj_w, &model.proj_b);
  const double norm = logsumexp(logits);
  for (double& v : logits) v -= norm;
  return logits;
}

}  // namespace mocha
