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

// Training objectives. Every term is available on plain tensors for
// evaluation and as a graph op for training; both forms share their
// arithmetic so the values agree bit for bit.

#ifndef MOCHA_OBJECTIVES_HPP_
#define MOCHA_OBJECTIVES_HPP_

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>

#include "mocha/autograd.hpp"
#include "mocha/ctc.hpp"
#include "mocha/tensor.hpp"

namespace mocha {

inline constexpr double kDefaultLabelSmoothing = 0.1;

struct LossWeights {
  double ctc = 0.0;       // in [0, 1]
  double quantity = 0.0;  // >= 0
  double sync = 0.0;      // >= 0

  // Throws Error when a weight is out of range.
  void validate() const;

  static LossWeights stage1() { return {0.3, 2.0, 0.0}; }
  static LossWeights stage2() { return {0.3, 0.0, 1.0}; }
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

struct LossBreakdown {
  double mocha_nll = 0.0;
  double ctc = 0.0;
  double quantity = 0.0;
  double sync = 0.0;
  double total = 0.0;
};

// |U - sum(alpha)|.
double quantity_loss(const Tensor& alpha, std::size_t token_count);
// mean_i |reference_i - expected_i|; throws on a length mismatch.
double sync_loss(const BoundarySeq& reference, std::span<const double> expected);
// Label-smoothed cross-entropy per token over log_probs (U x V):
//   -(1 - eps) log q(y) - (eps / V) sum_v log q(v)
double mocha_nll(const Tensor& log_probs, std::span<const std::size_t> labels,
                 double smoothing = kDefaultLabelSmoothing);
// (1 - w.ctc) nll + w.ctc ctc + w.quantity qua + w.sync sync.
double total_loss(const LossBreakdown& parts, const LossWeights& w);

Var quantity_loss(Var alpha, std::size_t token_count);
// `expected` is U x 1; the reference carries no gradient.
Var sync_loss(const BoundarySeq& reference, Var expected);
Var mocha_nll(Var log_probs, std::span<const std::size_t> labels,
              double smoothing = kDefaultLabelSmoothing);
Var total_loss(Var nll, Var ctc, Var quantity, Var sync, const LossWeights& w);

// Per-step CSV log with columns step,mocha_nll,ctc,quantity,sync,total.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path);
  void write(std::size_t step, const LossBreakdown& parts);

 private:
  std::ofstream out_;
};

}  // namespace mocha

#endif  // MOCHA_OBJECTIVES_HPP_
