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

#include "mocha/oracles/brute_force.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mocha::oracles {
namespace {

void enumerate_steps(const Tensor& p, std::size_t token, std::size_t start, double prefix,
                     Tensor& alpha) {
  const std::size_t u = p.rows();
  const std::size_t t = p.cols();
  if (token == u || prefix == 0.0) return;
  double survive = prefix;
  for (std::size_t j = start; j < t; ++j) {
    const double stop = survive * p.at(token, j);
    alpha.at(token, j) += stop;
    enumerate_steps(p, token + 1, j, stop, alpha);
    survive *= 1.0 - p.at(token, j);
  }
}

std::vector<std::size_t> collapse(const std::vector<std::size_t>& path, std::size_t blank) {
  std::vector<std::size_t> out;
  std::size_t prev = blank;
  for (std::size_t s : path) {
    if (s != blank && s != prev) out.push_back(s);
    prev = s;
  }
  return out;
}

std::size_t edit_rec(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const std::size_t sub = edit_rec(a.subspan(1), b.subspan(1)) + (a[0] == b[0] ? 0 : 1);
  const std::size_t del = edit_rec(a, b.subspan(1)) + 1;
  const std::size_t ins = edit_rec(a.subspan(1), b) + 1;
  return std::min({sub, del, ins});
}

}  // namespace

std::vector<double> naive_exclusive_cumprod(std::span<const double> x) {
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    double acc = 1.0;
    for (std::size_t l = 0; l < j; ++l) acc *= x[l];
    out[j] = acc;
  }
  return out;
}

std::vector<double> naive_moving_sum(std::span<const double> x, std::size_t back,
                                     std::size_t forward) {
  const auto n = static_cast<long>(x.size());
  std::vector<double> padded(x.size() + back + forward, 0.0);
  std::copy(x.begin(), x.end(), padded.begin() + static_cast<long>(back));
  std::vector<double> out(x.size(), 0.0);
  for (long j = 0; j < n; ++j) {
    for (std::size_t k = 0; k <= back + forward; ++k) out[j] += padded[j + static_cast<long>(k)];
  }
  return out;
}

Tensor enumerated_alignment(const Tensor& p) {
  Tensor alpha = Tensor::matrix(p.rows(), p.cols());
  if (p.cols() > 0) enumerate_steps(p, 0, 0, 1.0, alpha);
  return alpha;
}

Tensor naive_chunkwise_attention(const Tensor& alpha, const Tensor& u, std::size_t w) {
  const std::size_t rows = alpha.rows();
  const auto t = static_cast<long>(alpha.cols());
  const auto width = static_cast<long>(w);
  Tensor beta = Tensor::matrix(rows, alpha.cols());
  for (std::size_t i = 0; i < rows; ++i) {
    for (long j = 0; j < t; ++j) {
      double acc = 0.0;
      for (long k = j; k <= std::min(t - 1, j + width - 1); ++k) {
        double denom = 0.0;
        for (long l = std::max(0L, k - width + 1); l <= k; ++l) denom += std::exp(u.at(i, l));
        acc += alpha.at(i, k) * std::exp(u.at(i, j)) / denom;
      }
      beta.at(i, j) = acc;
    }
  }
  return beta;
}

std::vector<double> naive_monotonic_energy(const Tensor& memories, std::span<const double> state,
                                           const MonotonicEnergyParams& params) {
  const std::size_t a_dim = params.v.cols();
  double norm = 0.0;
  for (std::size_t a = 0; a < a_dim; ++a) norm += params.v[a] * params.v[a];
  norm = std::sqrt(norm);
  std::vector<double> out(memories.rows());
  for (std::size_t j = 0; j < memories.rows(); ++j) {
    double e = 0.0;
    for (std::size_t a = 0; a < a_dim; ++a) {
      double pre = params.b[a];
      for (std::size_t d = 0; d < memories.cols(); ++d) pre += memories.at(j, d) * params.w_h.at(d, a);
      for (std::size_t s = 0; s < state.size(); ++s) pre += state[s] * params.w_s.at(s, a);
      e += params.v[a] / norm * std::max(0.0, pre);
    }
    out[j] = params.g[0] * e + params.r[0];
  }
  return out;
}

CtcEnumeration enumerate_ctc(const Tensor& log_posteriors, std::span<const std::size_t> labels,
                             std::size_t blank) {
  const std::size_t t = log_posteriors.rows();
  const std::size_t v = log_posteriors.cols();
  const std::vector<std::size_t> target(labels.begin(), labels.end());
  CtcEnumeration out;
  double total = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> path(t, 0);
  while (true) {
    if (collapse(path, blank) == target) {
      double lp = 0.0;
      for (std::size_t k = 0; k < t; ++k) lp += log_posteriors.at(k, path[k]);
      total += std::exp(lp);
      best = std::max(best, lp);
      ++out.feasible_paths;
    }
    std::size_t k = 0;
    while (k < t && ++path[k] == v) path[k++] = 0;
    if (k == t) break;
  }
  out.log_total = std::log(total);
  out.log_best = best;
  return out;
}

std::size_t recursive_edit_distance(std::span<const std::size_t> hyp,
                                    std::span<const std::size_t> ref) {
  return edit_rec(ref, hyp);
}

}  // namespace mocha::oracles
