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

// Monotonic chunkwise attention.
//
// Training marginalizes the hard monotonic boundary over all left-to-right
// Bernoulli stopping paths:
//
//   alpha[i, j] = p[i, j] * sum_{k<=j} alpha[i-1, k] * prod_{l=k}^{j-1} (1 - p[i, l])
//
// which is evaluated with the division-free running form
//
//   q[i, 1] = alpha[i-1, 1]
//   q[i, j] = (1 - p[i, j-1]) * q[i, j-1] + alpha[i-1, j]
//   alpha[i, j] = p[i, j] * q[i, j]
//
// Soft attention over the w frames ending at each candidate boundary then
// yields beta. At test time the first frame with p > 0.5 at or after the
// previous boundary is taken as the boundary.
//
// Frame positions exposed by this header are 1-based unless stated
// otherwise; tensor indices are 0-based.

#ifndef MOCHA_ATTENTION_HPP_
#define MOCHA_ATTENTION_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mocha/autograd.hpp"
#include "mocha/numerics.hpp"
#include "mocha/tensor.hpp"

namespace mocha {

inline constexpr double kDefaultEnergyOffset = -4.0;
inline constexpr std::size_t kDefaultChunkWidth = 4;
inline constexpr double kBoundaryThreshold = 0.5;

// e = g * (v / ||v||) . ReLU(W_h h + W_s s + b) + r
struct MonotonicEnergyParams {
  Tensor w_h;  // d x A
  Tensor w_s;  // S x A
  Tensor b;    // 1 x A
  Tensor v;    // 1 x A
  Tensor g;    // 1 x 1
  Tensor r;    // 1 x 1

  static MonotonicEnergyParams zeros(std::size_t memory_dim, std::size_t state_dim,
                                     std::size_t attention_dim);
  // g starts at 1/sqrt(A) and r at `offset`.
  static MonotonicEnergyParams random(std::size_t memory_dim, std::size_t state_dim,
                                      std::size_t attention_dim, double offset, Rng& rng);
};

// u = v . ReLU(W_h h + W_s s + b): the monotonic energy without weight
// normalization and offset.
struct ChunkEnergyParams {
  Tensor w_h;
  Tensor w_s;
  Tensor b;
  Tensor v;

  static ChunkEnergyParams random(std::size_t memory_dim, std::size_t state_dim,
                                  std::size_t attention_dim, Rng& rng);
};

struct AlignmentState {
  Tensor p;                     // U x T selection probabilities
  Tensor alpha;                 // U x T expected alignments
  Tensor beta;                  // U x T chunkwise weights
  std::vector<double> b_mocha;  // U expected boundaries, 1-based
};

struct EnergyRow {
  Tensor energy;  // 1 x T
  Tensor p;       // 1 x T, sigmoid(energy)
};

// ---- value-level operations ---------------------------------------------

// Energies of one decoder state against all memories (T x d).
EnergyRow monotonic_energy(const Tensor& memories, const Tensor& state,
                           const MonotonicEnergyParams& params);

// Rows of p (U x T) in, expected alignments out, with alpha_0 one-hot at
// frame 1. An all-zero previous row propagates zeros.
Tensor expected_alignment(const Tensor& p);

// The same marginal via exclusive cumulative products and sums:
//   alpha_i = p_i * cumprod_i * cumsum(alpha_{i-1} / max(cumprod_i, floor))
// Exact in arithmetic; loses precision once the cumulative product
// underflows the floor. Kept as an independent algebraic route.
Tensor expected_alignment_cumulative(const Tensor& p);

// beta[i, j] = sum_{k=j}^{j+w-1} alpha[i, k] exp(u[i, j]) / sum_{l=k-w+1}^{k} exp(u[i, l]),
// windows truncated at the sequence edges, each denominator shifted by its
// window maximum.
Tensor chunkwise_attention(const Tensor& alpha, const Tensor& u, std::size_t w);

// b[i] = sum_j j * alpha[i, j] with 1-based j; not renormalized by the row mass.
std::vector<double> expected_boundary(const Tensor& alpha);

// ---- differentiable forms -------------------------------------------------

// Graph-bound view of MonotonicEnergyParams for one utterance: the memory
// projection is computed once and reused for every output step.
class MonotonicEnergy {
 public:
  MonotonicEnergy(Graph& g, MonotonicEnergyParams& params, Var memories);
  // 1 x T energies for decoder state `state` (1 x S).
  Var energy(Var state) const;

 private:
  Graph* g_;
  MonotonicEnergyParams* params_;
  Var projected_;  // T x A
  Var unit_v_;     // 1 x A
};

class ChunkEnergy {
 public:
  ChunkEnergy(Graph& g, ChunkEnergyParams& params, Var memories);
  Var energy(Var state) const;  // 1 x T

 private:
  Graph* g_;
  ChunkEnergyParams* params_;
  Var projected_;
};

// One step of the alignment recurrence: both arguments are 1 x T.
Var monotonic_alignment_step(Var prev_alpha, Var p);
// Row-wise chunkwise attention for any number of rows.
Var chunkwise_attention(Var alpha, Var u, std::size_t w);
// U x 1 expected boundaries.
Var expected_boundary(Var alpha);

// One-hot initial alignment of width `frames`.
Tensor initial_alignment(std::size_t frames);

// ---- streaming decode -----------------------------------------------------

// Lazily projects memories as they are needed so that each frame's
// projection is computed at most once per utterance.
class StreamingEnergyCache {
 public:
  StreamingEnergyCache(const MonotonicEnergyParams& mono, const ChunkEnergyParams& chunk,
                       const Tensor& memories);

  // Selection probability of frame `frame` (1-based) for a decoder state
  // whose projection was prepared with prepare_state().
  double selection_probability(std::size_t frame);
  double chunk_energy(std::size_t frame);
  void prepare_state(const Tensor& state);

  std::size_t available_frames() const { return memories_->rows(); }
  const Tensor& memories() const { return *memories_; }
  std::size_t monotonic_evaluations() const { return monotonic_evals_; }
  std::size_t chunk_evaluations() const { return chunk_evals_; }

 private:
  const MonotonicEnergyParams* mono_;
  const ChunkEnergyParams* chunk_;
  const Tensor* memories_;
  std::vector<double> unit_v_;
  std::vector<std::vector<double>> mono_proj_;
  std::vector<std::vector<double>> chunk_proj_;
  std::vector<double> mono_state_;
  std::vector<double> chunk_state_;
  std::size_t monotonic_evals_ = 0;
  std::size_t chunk_evals_ = 0;
};

struct StreamingStep {
  std::optional<std::size_t> boundary;  // 1-based; empty means no emission
  std::vector<double> context;          // chunkwise context when emitted
  std::vector<double> chunk_weights;    // softmax over [boundary-w+1, boundary]
};

// Scans frames prev_boundary, prev_boundary+1, ... of the available prefix
// and stops at the first frame with p > 0.5. The state must already be
// prepared on `cache`.
StreamingStep streaming_decode_step(StreamingEnergyCache& cache, std::size_t prev_boundary,
                                    std::size_t w);

// Lower-level form over an explicit probability row, used when p is known.
std::optional<std::size_t> first_boundary(std::span<const double> p, std::size_t prev_boundary);

}  // namespace mocha

#endif  // MOCHA_ATTENTION_HPP_
