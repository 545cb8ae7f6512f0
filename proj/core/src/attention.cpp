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

#include "mocha/attention.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace mocha {
namespace {

Var energy_expr(Var projected, Var unit_v, Var w_s, Var bias, Var state) {
  const Var pre = relu(add_row(projected, add(matmul(state, w_s), bias)));
  return matmul_nt(unit_v, pre);
}

// alpha_row = recurrence(prev, p); q receives the running sums.
void alignment_row_forward(std::span<const double> prev, std::span<const double> p,
                           std::span<double> alpha, std::span<double> q) {
  const std::size_t t = p.size();
  double running = 0.0;
  for (std::size_t j = 0; j < t; ++j) {
    running = (j == 0 ? 0.0 : (1.0 - p[j - 1]) * running) + prev[j];
    q[j] = running;
    alpha[j] = p[j] * running;
  }
}

struct ChunkRowCache {
  std::vector<double> window_max;
  std::vector<double> denom;
};

void chunk_row_forward(std::span<const double> alpha, std::span<const double> u, std::size_t w,
                       std::span<double> beta, ChunkRowCache& cache) {
  const std::size_t t = u.size();
  cache.window_max.assign(t, 0.0);
  cache.denom.assign(t, 0.0);
  for (std::size_t k = 0; k < t; ++k) {
    const std::size_t lo = k + 1 >= w ? k + 1 - w : 0;
    double m = u[lo];
    for (std::size_t l = lo + 1; l <= k; ++l) m = std::max(m, u[l]);
    double d = 0.0;
    for (std::size_t l = lo; l <= k; ++l) d += std::exp(u[l] - m);
    cache.window_max[k] = m;
    cache.denom[k] = d;
  }
  for (std::size_t j = 0; j < t; ++j) {
    const std::size_t hi = std::min(t - 1, j + w - 1);
    double acc = 0.0;
    for (std::size_t k = j; k <= hi; ++k) {
      if (alpha[k] == 0.0) continue;
      acc += alpha[k] * std::exp(u[j] - cache.window_max[k]) / cache.denom[k];
    }
    beta[j] = acc;
  }
}

void chunk_row_backward(std::span<const double> alpha, std::span<const double> u, std::size_t w,
                        const ChunkRowCache& cache, std::span<const double> g_beta,
                        std::span<double> g_alpha, std::span<double> g_u) {
  const std::size_t t = u.size();
  // d beta_j / d alpha_k = s[k, j] for j in window(k).
  std::vector<double> ga(t, 0.0);
  for (std::size_t k = 0; k < t; ++k) {
    const std::size_t lo = k + 1 >= w ? k + 1 - w : 0;
    double acc = 0.0;
    for (std::size_t j = lo; j <= k; ++j)
      acc += g_beta[j] * std::exp(u[j] - cache.window_max[k]) / cache.denom[k];
    ga[k] = acc;
  }
  if (!g_alpha.empty()) {
    for (std::size_t k = 0; k < t; ++k) g_alpha[k] += ga[k];
  }
  if (!g_u.empty()) {
    for (std::size_t l = 0; l < t; ++l) {
      const std::size_t hi = std::min(t - 1, l + w - 1);
      double acc = 0.0;
      for (std::size_t k = l; k <= hi; ++k) {
        if (alpha[k] == 0.0) continue;
        const double s = std::exp(u[l] - cache.window_max[k]) / cache.denom[k];
        acc += alpha[k] * s * (g_beta[l] - ga[k]);
      }
      g_u[l] += acc;
    }
  }
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(fmt::format("{}: shape mismatch {} vs {}", what, a.shape_string(),
                            b.shape_string()));
  }
}

}  // namespace

MonotonicEnergyParams MonotonicEnergyParams::zeros(std::size_t memory_dim,
                                                   std::size_t state_dim,
                                                   std::size_t attention_dim) {
  MonotonicEnergyParams p;
  p.w_h = Tensor::matrix(memory_dim, attention_dim);
  p.w_s = Tensor::matrix(state_dim, attention_dim);
  p.b = Tensor::matrix(1, attention_dim);
  p.v = Tensor::matrix(1, attention_dim, 1.0);
  p.g = Tensor::scalar(1.0);
  p.r = Tensor::scalar(kDefaultEnergyOffset);
  return p;
}

MonotonicEnergyParams MonotonicEnergyParams::random(std::size_t memory_dim,
                                                    std::size_t state_dim,
                                                    std::size_t attention_dim, double offset,
                                                    Rng& rng) {
  MonotonicEnergyParams p = zeros(memory_dim, state_dim, attention_dim);
  init_uniform(p.w_h, 1.0 / std::sqrt(static_cast<double>(memory_dim)), rng);
  init_uniform(p.w_s, 1.0 / std::sqrt(static_cast<double>(state_dim)), rng);
  init_uniform(p.v, 1.0 / std::sqrt(static_cast<double>(attention_dim)), rng);
  p.g = Tensor::scalar(1.0 / std::sqrt(static_cast<double>(attention_dim)));
  p.r = Tensor::scalar(offset);
  return p;
}

ChunkEnergyParams ChunkEnergyParams::random(std::size_t memory_dim, std::size_t state_dim,
                                            std::size_t attention_dim, Rng& rng) {
  ChunkEnergyParams p{Tensor::matrix(memory_dim, attention_dim),
                      Tensor::matrix(state_dim, attention_dim), Tensor::matrix(1, attention_dim),
                      Tensor::matrix(1, attention_dim)};
  init_uniform(p.w_h, 1.0 / std::sqrt(static_cast<double>(memory_dim)), rng);
  init_uniform(p.w_s, 1.0 / std::sqrt(static_cast<double>(state_dim)), rng);
  init_uniform(p.v, 1.0 / std::sqrt(static_cast<double>(attention_dim)), rng);
  return p;
}

EnergyRow monotonic_energy(const Tensor& memories, const Tensor& state,
                           const MonotonicEnergyParams& params) {
  if (memories.cols() != params.w_h.rows() || state.cols() != params.w_s.rows()) {
    throw Error(fmt::format("monotonic_energy: memories {} / state {} do not match W_h {} / W_s {}",
                            memories.shape_string(), state.shape_string(),
                            params.w_h.shape_string(), params.w_s.shape_string()));
  }
  Graph g;
  const Var projected = matmul(g.constant(memories), g.constant(params.w_h));
  const Var unit_v = normalize(g.constant(params.v));
  Var e = energy_expr(projected, unit_v, g.constant(params.w_s), g.constant(params.b),
                      g.constant(state));
  e = add_scalar(mul_scalar(e, g.constant(params.g)), g.constant(params.r));
  EnergyRow row{e.value(), e.value()};
  for (double& v : row.p.storage()) v = sigmoid(v);
  return row;
}

Tensor initial_alignment(std::size_t frames) {
  Tensor a = Tensor::matrix(1, frames);
  if (frames > 0) a[0] = 1.0;
  return a;
}

Tensor expected_alignment(const Tensor& p) {
  const std::size_t u = p.rows(), t = p.cols();
  Tensor alpha = Tensor::matrix(u, t);
  if (t == 0) return alpha;
  Tensor prev = initial_alignment(t);
  std::vector<double> q(t);
  for (std::size_t i = 0; i < u; ++i) {
    alignment_row_forward(prev.data(), p.row_span(i), alpha.row_span(i), q);
    std::copy(alpha.row_span(i).begin(), alpha.row_span(i).end(), prev.storage().begin());
  }
  return alpha;
}

Tensor expected_alignment_cumulative(const Tensor& p) {
  const std::size_t u = p.rows(), t = p.cols();
  Tensor alpha = Tensor::matrix(u, t);
  if (t == 0) return alpha;
  std::vector<double> prev = initial_alignment(t).storage();
  std::vector<double> one_minus(t);
  std::vector<double> ratio(t);
  for (std::size_t i = 0; i < u; ++i) {
    const auto row = p.row_span(i);
    for (std::size_t j = 0; j < t; ++j) one_minus[j] = 1.0 - clamp_prob(row[j]);
    const std::vector<double> cp = exclusive_cumprod(one_minus);
    for (std::size_t j = 0; j < t; ++j) ratio[j] = prev[j] / std::max(cp[j], kProbFloor);
    const std::vector<double> acc = cumsum(ratio);
    for (std::size_t j = 0; j < t; ++j) {
      alpha.at(i, j) = clamp_prob(row[j]) * cp[j] * acc[j];
      prev[j] = alpha.at(i, j);
    }
  }
  return alpha;
}

Tensor chunkwise_attention(const Tensor& alpha, const Tensor& u, std::size_t w) {
  if (w == 0) throw Error("chunkwise_attention: chunk width must be >= 1");
  check_same_shape(alpha, u, "chunkwise_attention");
  Tensor beta = Tensor::matrix(alpha.rows(), alpha.cols());
  if (alpha.cols() == 0) return beta;
  ChunkRowCache cache;
  for (std::size_t i = 0; i < alpha.rows(); ++i) {
    chunk_row_forward(alpha.row_span(i), u.row_span(i), w, beta.row_span(i), cache);
  }
  return beta;
}

std::vector<double> expected_boundary(const Tensor& alpha) {
  std::vector<double> b(alpha.rows(), 0.0);
  for (std::size_t i = 0; i < alpha.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < alpha.cols(); ++j)
      acc += static_cast<double>(j + 1) * alpha.at(i, j);
    b[i] = acc;
  }
  return b;
}

MonotonicEnergy::MonotonicEnergy(Graph& g, MonotonicEnergyParams& params, Var memories)
    : g_(&g),
      params_(&params),
      projected_(matmul(memories, g.param(params.w_h))),
      unit_v_(normalize(g.param(params.v))) {}

Var MonotonicEnergy::energy(Var state) const {
  Graph& g = *g_;
  const Var e = energy_expr(projected_, unit_v_, g.param(params_->w_s), g.param(params_->b),
                            state);
  return add_scalar(mul_scalar(e, g.param(params_->g)), g.param(params_->r));
}

ChunkEnergy::ChunkEnergy(Graph& g, ChunkEnergyParams& params, Var memories)
    : g_(&g), params_(&params), projected_(matmul(memories, g.param(params.w_h))) {}

Var ChunkEnergy::energy(Var state) const {
  Graph& g = *g_;
  return energy_expr(projected_, g.param(params_->v), g.param(params_->w_s),
                     g.param(params_->b), state);
}

Var monotonic_alignment_step(Var prev_alpha, Var p) {
  const Tensor& prev = prev_alpha.value();
  const Tensor& pv = p.value();
  if (prev.rows() != 1 || pv.rows() != 1 || prev.cols() != pv.cols()) {
    throw Error(fmt::format("monotonic_alignment_step: {} vs {}", prev.shape_string(),
                            pv.shape_string()));
  }
  const std::size_t t = pv.cols();
  Tensor alpha = Tensor::matrix(1, t);
  std::vector<double> q(t);
  alignment_row_forward(prev.data(), pv.data(), alpha.data(), q);
  return p.graph().record(
      std::move(alpha), {prev_alpha, p},
      [prev_alpha, p, q = std::move(q)](Graph& g, std::span<const double> ga) {
        const Tensor& pv = g.value(p);
        const std::size_t t = pv.cols();
        const bool need_p = g.requires_grad(p);
        const bool need_prev = g.requires_grad(prev_alpha);
        std::span<double> gp = need_p ? g.grad(p) : std::span<double>{};
        std::span<double> gprev = need_prev ? g.grad(prev_alpha) : std::span<double>{};
        double gq_next = 0.0;
        for (std::size_t jj = t; jj-- > 0;) {
          if (need_p) gp[jj] += ga[jj] * q[jj] - gq_next * q[jj];
          const double gq = ga[jj] * pv[jj] + gq_next * (1.0 - pv[jj]);
          if (need_prev) gprev[jj] += gq;
          gq_next = gq;
        }
      });
}

Var chunkwise_attention(Var alpha, Var u, std::size_t w) {
  if (w == 0) throw Error("chunkwise_attention: chunk width must be >= 1");
  const Tensor& a = alpha.value();
  const Tensor& uv = u.value();
  check_same_shape(a, uv, "chunkwise_attention");
  const std::size_t rows = a.rows();
  Tensor beta = Tensor::matrix(rows, a.cols());
  std::vector<ChunkRowCache> caches(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    chunk_row_forward(a.row_span(i), uv.row_span(i), w, beta.row_span(i), caches[i]);
  }
  return alpha.graph().record(
      std::move(beta), {alpha, u},
      [alpha, u, w, caches = std::move(caches)](Graph& g, std::span<const double> gb) {
        const Tensor& a = g.value(alpha);
        const Tensor& uv = g.value(u);
        const std::size_t t = a.cols();
        std::span<double> ga = g.requires_grad(alpha) ? g.grad(alpha) : std::span<double>{};
        std::span<double> gu = g.requires_grad(u) ? g.grad(u) : std::span<double>{};
        for (std::size_t i = 0; i < a.rows(); ++i) {
          chunk_row_backward(a.row_span(i), uv.row_span(i), w, caches[i], gb.subspan(i * t, t),
                             ga.empty() ? ga : ga.subspan(i * t, t),
                             gu.empty() ? gu : gu.subspan(i * t, t));
        }
      });
}

Var expected_boundary(Var alpha) {
  const std::size_t t = alpha.cols();
  Tensor positions = Tensor::matrix(t, 1);
  for (std::size_t j = 0; j < t; ++j) positions[j] = static_cast<double>(j + 1);
  return matmul(alpha, alpha.graph().constant(std::move(positions)));
}

StreamingEnergyCache::StreamingEnergyCache(const MonotonicEnergyParams& mono,
                                           const ChunkEnergyParams& chunk,
                                           const Tensor& memories)
    : mono_(&mono),
      chunk_(&chunk),
      memories_(&memories),
      mono_proj_(memories.rows()),
      chunk_proj_(memories.rows()) {
  if (memories.cols() != mono.w_h.rows() || memories.cols() != chunk.w_h.rows()) {
    throw Error("StreamingEnergyCache: memory width does not match the energy projections");
  }
  double norm = 0.0;
  for (double v : mono.v.storage()) norm += v * v;
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw Error("monotonic energy direction v has zero norm");
  unit_v_.resize(mono.v.size());
  for (std::size_t k = 0; k < unit_v_.size(); ++k) unit_v_[k] = mono.v[k] / norm;
}

namespace {

std::vector<double> project_row(std::span<const double> x, const Tensor& w) {
  std::vector<double> out(w.cols(), 0.0);
  for (std::size_t p = 0; p < x.size(); ++p) {
    const double xp = x[p];
    for (std::size_t a = 0; a < w.cols(); ++a) out[a] += xp * w.at(p, a);
  }
  return out;
}

}  // namespace

void StreamingEnergyCache::prepare_state(const Tensor& state) {
  mono_state_ = project_row(state.data(), mono_->w_s);
  for (std::size_t a = 0; a < mono_state_.size(); ++a) mono_state_[a] += mono_->b[a];
  chunk_state_ = project_row(state.data(), chunk_->w_s);
  for (std::size_t a = 0; a < chunk_state_.size(); ++a) chunk_state_[a] += chunk_->b[a];
}

double StreamingEnergyCache::selection_probability(std::size_t frame) {
  const std::size_t j = frame - 1;
  if (mono_proj_[j].empty()) mono_proj_[j] = project_row(memories_->row_span(j), mono_->w_h);
  ++monotonic_evals_;
  double e = 0.0;
  for (std::size_t a = 0; a < unit_v_.size(); ++a) {
    const double pre = mono_proj_[j][a] + mono_state_[a];
    if (pre > 0.0) e += unit_v_[a] * pre;
  }
  e = mono_->g[0] * e + mono_->r[0];
  return sigmoid(e);
}

double StreamingEnergyCache::chunk_energy(std::size_t frame) {
  const std::size_t j = frame - 1;
  if (chunk_proj_[j].empty()) chunk_proj_[j] = project_row(memories_->row_span(j), chunk_->w_h);
  ++chunk_evals_;
  double u = 0.0;
  for (std::size_t a = 0; a < chunk_state_.size(); ++a) {
    const double pre = chunk_proj_[j][a] + chunk_state_[a];
    if (pre > 0.0) u += chunk_->v[a] * pre;
  }
  return u;
}

std::optional<std::size_t> first_boundary(std::span<const double> p, std::size_t prev_boundary) {
  if (prev_boundary == 0) throw Error("boundaries are 1-based");
  for (std::size_t j = prev_boundary; j <= p.size(); ++j) {
    if (p[j - 1] > kBoundaryThreshold) return j;
  }
  return std::nullopt;
}

StreamingStep streaming_decode_step(StreamingEnergyCache& cache, std::size_t prev_boundary,
                                    std::size_t w) {
  if (prev_boundary == 0) throw Error("boundaries are 1-based");
  if (w == 0) throw Error("chunk width must be >= 1");
  StreamingStep step;
  const std::size_t t = cache.available_frames();
  for (std::size_t j = prev_boundary; j <= t; ++j) {
    if (cache.selection_probability(j) > kBoundaryThreshold) {
      step.boundary = j;
      break;
    }
  }
  if (!step.boundary) return step;

  const std::size_t end = *step.boundary;
  const std::size_t begin = end >= w ? end - w + 1 : 1;
  std::vector<double> u;
  for (std::size_t j = begin; j <= end; ++j) u.push_back(cache.chunk_energy(j));
  const double m = *std::max_element(u.begin(), u.end());
  double denom = 0.0;
  for (double& v : u) {
    v = std::exp(v - m);
    denom += v;
  }
  for (double& v : u) v /= denom;
  const Tensor& memories = cache.memories();
  step.context.assign(memories.cols(), 0.0);
  for (std::size_t j = begin; j <= end; ++j) {
    const double weight = u[j - begin];
    const auto h = memories.row_span(j - 1);
    for (std::size_t d = 0; d < h.size(); ++d) step.context[d] += weight * h[d];
  }
  step.chunk_weights = std::move(u);
  return step;
}

}  // namespace mocha
