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

#include "mocha/objectives.hpp"

#include <cmath>

#include <fmt/format.h>

namespace mocha {
namespace {

double smoothed_token_nll(std::span<const double> row, std::size_t label, double smoothing) {
  if (smoothing == 0.0) return -row[label];
  double all = 0.0;
  for (double x : row) all += x;
  return -(1.0 - smoothing) * row[label] - smoothing / static_cast<double>(row.size()) * all;
}

void check_labels(std::size_t rows, std::size_t cols, std::span<const std::size_t> labels) {
  if (rows != labels.size()) {
    throw Error(fmt::format("mocha_nll: {} prediction rows for {} labels", rows, labels.size()));
  }
  for (std::size_t y : labels) {
    if (y >= cols) throw Error(fmt::format("mocha_nll: label {} outside vocabulary {}", y, cols));
  }
}

}  // namespace

void LossWeights::validate() const {
  if (!(ctc >= 0.0 && ctc <= 1.0)) throw Error(fmt::format("lambda_ctc {} outside [0, 1]", ctc));
  if (!(quantity >= 0.0)) throw Error(fmt::format("lambda_qua {} is negative", quantity));
  if (!(sync >= 0.0)) throw Error(fmt::format("lambda_sync {} is negative", sync));
}

double quantity_loss(const Tensor& alpha, std::size_t token_count) {
  double mass = 0.0;
  for (std::size_t k = 0; k < alpha.size(); ++k) mass += alpha[k];
  return std::abs(static_cast<double>(token_count) - mass);
}

double sync_loss(const BoundarySeq& reference, std::span<const double> expected) {
  const std::size_t n = reference.positions.size();
  if (n != expected.size()) {
    throw Error(fmt::format("sync_loss: {} reference boundaries vs {} expected", n,
                            expected.size()));
  }
  if (n == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += std::abs(static_cast<double>(reference.positions[i]) - expected[i]);
  }
  return acc / static_cast<double>(n);
}

double mocha_nll(const Tensor& log_probs, std::span<const std::size_t> labels, double smoothing) {
  check_labels(log_probs.rows(), log_probs.cols(), labels);
  if (labels.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    acc += smoothed_token_nll(log_probs.row_span(i), labels[i], smoothing);
  }
  return acc / static_cast<double>(labels.size());
}

double total_loss(const LossBreakdown& parts, const LossWeights& w) {
  return (1.0 - w.ctc) * parts.mocha_nll + w.ctc * parts.ctc + w.quantity * parts.quantity +
         w.sync * parts.sync;
}

Var quantity_loss(Var alpha, std::size_t token_count) {
  return abs(shift(scale(sum(alpha), -1.0), static_cast<double>(token_count)));
}

Var sync_loss(const BoundarySeq& reference, Var expected) {
  const std::size_t n = reference.positions.size();
  if (n != expected.rows() || expected.cols() != 1) {
    throw Error(fmt::format("sync_loss: {} reference boundaries vs expected of shape {}", n,
                            expected.value().shape_string()));
  }
  Graph& g = expected.graph();
  if (n == 0) return g.constant(Tensor::scalar(0.0));
  Tensor ref = Tensor::matrix(n, 1);
  for (std::size_t i = 0; i < n; ++i) ref[i] = static_cast<double>(reference.positions[i]);
  return scale(sum(abs(sub(g.constant(std::move(ref)), expected))), 1.0 / static_cast<double>(n));
}

Var mocha_nll(Var log_probs, std::span<const std::size_t> labels, double smoothing) {
  const Tensor& lp = log_probs.value();
  const std::size_t u = lp.rows();
  const std::size_t v = lp.cols();
  check_labels(u, v, labels);
  Graph& g = log_probs.graph();
  if (u == 0) return g.constant(Tensor::scalar(0.0));
  const double value = mocha_nll(lp, labels, smoothing);
  std::vector<std::size_t> ys(labels.begin(), labels.end());
  return g.record(Tensor::scalar(value), {log_probs},
                  [log_probs, ys = std::move(ys), smoothing, u, v](Graph& g,
                                                                  std::span<const double> go) {
                    auto gl = g.grad(log_probs);
                    const double norm = go[0] / static_cast<double>(u);
                    const double uniform = smoothing / static_cast<double>(v);
                    for (std::size_t i = 0; i < u; ++i) {
                      for (std::size_t k = 0; k < v; ++k) gl[i * v + k] -= norm * uniform;
                      gl[i * v + ys[i]] -= norm * (1.0 - smoothing);
                    }
                  });
}

Var total_loss(Var nll, Var ctc, Var quantity, Var sync, const LossWeights& w) {
  return scale(nll, 1.0 - w.ctc) + scale(ctc, w.ctc) + scale(quantity, w.quantity) +
         scale(sync, w.sync);
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw Error(fmt::format("cannot open metrics log {}", path.string()));
  out_ << "step,mocha_nll,ctc,quantity,sync,total\n";
}

void MetricsWriter::write(std::size_t step, const LossBreakdown& parts) {
  out_ << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", step, parts.mocha_nll,
                      parts.ctc, parts.quantity, parts.sync, parts.total);
  out_.flush();
}

}  // namespace mocha
