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

#include "mocha/ctc.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "mocha/numerics.hpp"

namespace mocha {
namespace {

struct LogAddReducer {
  // Returns the reduced value; `choice` untouched.
  double operator()(std::span<const double> candidates, int& /*choice*/) const {
    double acc = kNegInf;
    for (double c : candidates) acc = log_add(acc, c);
    return acc;
  }
};

struct MaxReducer {
  // Candidates arrive in preference order; only a strictly larger value
  // displaces an earlier one.
  double operator()(std::span<const double> candidates, int& choice) const {
    double best = candidates[0];
    choice = 0;
    for (std::size_t k = 1; k < candidates.size(); ++k) {
      if (candidates[k] > best) {
        best = candidates[k];
        choice = static_cast<int>(k);
      }
    }
    return best;
  }
};

bool can_skip(const std::vector<std::size_t>& ext, std::size_t s, std::size_t blank) {
  return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2];
}

void check_feasible(const Tensor& log_posteriors, std::span<const std::size_t> labels,
                    std::size_t blank) {
  const std::size_t t = log_posteriors.rows();
  const std::size_t v = log_posteriors.cols();
  if (t == 0) throw CtcInfeasibleError("CTC needs at least one frame");
  if (blank >= v) throw Error("blank index outside the vocabulary");
  for (std::size_t l : labels) {
    if (l >= v) throw Error(fmt::format("label {} outside vocabulary of size {}", l, v));
    if (l == blank) throw Error("labels must not contain the blank symbol");
  }
  const std::size_t need = ctc_min_frames(labels);
  if (t < need) {
    throw CtcInfeasibleError(fmt::format(
        "CTC alignment infeasible: {} labels need at least {} frames, got {}", labels.size(),
        need, t));
  }
}

// Forward trellis; `back` (optional) receives the predecessor state chosen
// at every (t, s) as an offset 0, 1 or 2.
template <typename Reducer>
Tensor forward_trellis(const Tensor& lp, const std::vector<std::size_t>& ext, std::size_t blank,
                       Reducer reduce, std::vector<int>* back) {
  const std::size_t t_len = lp.rows();
  const std::size_t s_len = ext.size();
  Tensor alpha = Tensor::matrix(t_len, s_len, kNegInf);
  if (back != nullptr) back->assign(t_len * s_len, -1);
  alpha.at(0, 0) = lp.at(0, ext[0]);
  if (s_len > 1) alpha.at(0, 1) = lp.at(0, ext[1]);
  double cand[3];
  for (std::size_t t = 1; t < t_len; ++t) {
    for (std::size_t s = 0; s < s_len; ++s) {
      std::size_t n = 0;
      cand[n++] = alpha.at(t - 1, s);
      if (s >= 1) cand[n++] = alpha.at(t - 1, s - 1);
      if (can_skip(ext, s, blank)) cand[n++] = alpha.at(t - 1, s - 2);
      int choice = -1;
      const double best = reduce(std::span<const double>(cand, n), choice);
      if (best == kNegInf) continue;
      alpha.at(t, s) = best + lp.at(t, ext[s]);
      if (back != nullptr) (*back)[t * s_len + s] = choice;
    }
  }
  return alpha;
}

Tensor backward_trellis(const Tensor& lp, const std::vector<std::size_t>& ext, std::size_t blank) {
  const std::size_t t_len = lp.rows();
  const std::size_t s_len = ext.size();
  Tensor beta = Tensor::matrix(t_len, s_len, kNegInf);
  beta.at(t_len - 1, s_len - 1) = lp.at(t_len - 1, ext[s_len - 1]);
  if (s_len > 1) beta.at(t_len - 1, s_len - 2) = lp.at(t_len - 1, ext[s_len - 2]);
  for (std::size_t t = t_len - 1; t-- > 0;) {
    for (std::size_t s = 0; s < s_len; ++s) {
      double acc = beta.at(t + 1, s);
      if (s + 1 < s_len) acc = log_add(acc, beta.at(t + 1, s + 1));
      if (s + 2 < s_len && can_skip(ext, s + 2, blank)) acc = log_add(acc, beta.at(t + 1, s + 2));
      if (acc == kNegInf) continue;
      beta.at(t, s) = acc + lp.at(t, ext[s]);
    }
  }
  return beta;
}

double terminal_score(const Tensor& alpha) {
  const std::size_t t = alpha.rows() - 1;
  const std::size_t s = alpha.cols();
  return s > 1 ? log_add(alpha.at(t, s - 1), alpha.at(t, s - 2)) : alpha.at(t, 0);
}

}  // namespace

std::vector<std::size_t> extend_labels(std::span<const std::size_t> labels, std::size_t blank) {
  std::vector<std::size_t> ext;
  ext.reserve(2 * labels.size() + 1);
  ext.push_back(blank);
  for (std::size_t l : labels) {
    ext.push_back(l);
    ext.push_back(blank);
  }
  return ext;
}

std::size_t ctc_min_frames(std::span<const std::size_t> labels) {
  std::size_t repeats = 0;
  for (std::size_t i = 1; i < labels.size(); ++i) repeats += labels[i] == labels[i - 1] ? 1 : 0;
  return std::max<std::size_t>(1, labels.size() + repeats);
}

CtcResult ctc_loss(const Tensor& log_posteriors, std::span<const std::size_t> labels,
                   std::size_t blank) {
  check_feasible(log_posteriors, labels, blank);
  CtcResult result;
  CtcLattice& lat = result.lattice;
  lat.extended_labels = extend_labels(labels, blank);
  lat.log_alpha = forward_trellis(log_posteriors, lat.extended_labels, blank, LogAddReducer{}, nullptr);
  lat.log_beta = backward_trellis(log_posteriors, lat.extended_labels, blank);
  lat.log_likelihood = terminal_score(lat.log_alpha);
  result.loss = -lat.log_likelihood;
  return result;
}

Tensor ctc_loss_gradient(const Tensor& log_posteriors, const CtcResult& result, std::size_t blank) {
  (void)blank;
  const CtcLattice& lat = result.lattice;
  const std::size_t t_len = log_posteriors.rows();
  Tensor grad = Tensor::matrix(t_len, log_posteriors.cols());
  if (!std::isfinite(lat.log_likelihood)) return grad;
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t s = 0; s < lat.extended_labels.size(); ++s) {
      const double a = lat.log_alpha.at(t, s);
      const double b = lat.log_beta.at(t, s);
      if (a == kNegInf || b == kNegInf) continue;
      const std::size_t k = lat.extended_labels[s];
      // alpha and beta both include the emission at t.
      grad.at(t, k) -= std::exp(a + b - log_posteriors.at(t, k) - lat.log_likelihood);
    }
  }
  return grad;
}

Var ctc_loss(Var log_posteriors, std::span<const std::size_t> labels, std::size_t blank) {
  const Tensor& lp = log_posteriors.value();
  CtcResult result = ctc_loss(lp, labels, blank);
  Tensor grad = ctc_loss_gradient(lp, result, blank);
  return log_posteriors.graph().record(
      Tensor::scalar(result.loss), {log_posteriors},
      [log_posteriors, grad = std::move(grad)](Graph& g, std::span<const double> go) {
        auto gl = g.grad(log_posteriors);
        for (std::size_t k = 0; k < gl.size(); ++k) gl[k] += go[0] * grad[k];
      });
}

std::vector<std::size_t> ctc_forced_align(const Tensor& log_posteriors,
                                          std::span<const std::size_t> labels, std::size_t blank) {
  check_feasible(log_posteriors, labels, blank);
  const std::vector<std::size_t> ext = extend_labels(labels, blank);
  std::vector<int> back;
  const Tensor score = forward_trellis(log_posteriors, ext, blank, MaxReducer{}, &back);
  const std::size_t t_len = log_posteriors.rows();
  const std::size_t s_len = ext.size();

  std::size_t s = s_len - 1;
  if (s_len > 1 && score.at(t_len - 1, s_len - 2) > score.at(t_len - 1, s_len - 1)) s = s_len - 2;
  if (score.at(t_len - 1, s) == kNegInf) {
    throw CtcInfeasibleError("no path with finite probability collapses to the labels");
  }
  std::vector<std::size_t> path(t_len);
  for (std::size_t t = t_len; t-- > 0;) {
    path[t] = ext[s];
    if (t == 0) break;
    const int choice = back[t * s_len + s];
    s -= static_cast<std::size_t>(choice);
  }
  return path;
}

double path_log_probability(const Tensor& log_posteriors, std::span<const std::size_t> path) {
  double acc = 0.0;
  for (std::size_t t = 0; t < path.size(); ++t) acc += log_posteriors.at(t, path[t]);
  return acc;
}

std::vector<std::size_t> ctc_collapse(std::span<const std::size_t> path, std::size_t blank) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < path.size(); ++t) {
    if (path[t] == blank) continue;
    if (t > 0 && path[t] == path[t - 1]) continue;
    out.push_back(path[t]);
  }
  return out;
}

BoundarySeq extract_boundaries(std::span<const std::size_t> path, bool append_eos,
                               std::size_t blank) {
  BoundarySeq b;
  for (std::size_t t = 0; t < path.size(); ++t) {
    if (path[t] == blank) continue;
    if (t > 0 && path[t] == path[t - 1]) continue;  // leftmost frame of a run
    b.positions.push_back(t + 1);
  }
  if (append_eos) b.positions.push_back(path.size());
  return b;
}

std::vector<Spike> ctc_greedy_spikes(const Tensor& log_posteriors, std::size_t blank) {
  std::vector<Spike> spikes;
  for (std::size_t t = 0; t < log_posteriors.rows(); ++t) {
    const auto row = log_posteriors.row_span(t);
    const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best != blank) spikes.push_back({t + 1, best});
  }
  return spikes;
}

}  // namespace mocha
