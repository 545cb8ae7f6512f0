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

// Slow reference implementations used only by tests. Each one evaluates
// its quantity straight from the definition: loops instead of recurrences,
// enumeration instead of dynamic programming.

#ifndef MOCHA_ORACLES_BRUTE_FORCE_HPP_
#define MOCHA_ORACLES_BRUTE_FORCE_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "mocha/attention.hpp"
#include "mocha/tensor.hpp"

namespace mocha::oracles {

std::vector<double> naive_exclusive_cumprod(std::span<const double> x);
std::vector<double> naive_moving_sum(std::span<const double> x, std::size_t back,
                                     std::size_t forward);

// Enumerates every sequence of stopping decisions j_1 <= ... <= j_U (each
// scan starting at the previous stop, the first at frame 1) including scans
// that never stop, and accumulates the probability of each prefix.
Tensor enumerated_alignment(const Tensor& p);

// beta straight from the window sums with unshifted exponentials.
Tensor naive_chunkwise_attention(const Tensor& alpha, const Tensor& u, std::size_t w);

// One frame at a time, no shared projections.
std::vector<double> naive_monotonic_energy(const Tensor& memories, std::span<const double> state,
                                           const MonotonicEnergyParams& params);

struct CtcEnumeration {
  double log_total = 0.0;         // log of the summed path probability
  double log_best = 0.0;          // log of the best path probability
  std::size_t feasible_paths = 0;
};

// Visits all V^T label paths, collapses each and keeps those equal to
// `labels`.
CtcEnumeration enumerate_ctc(const Tensor& log_posteriors, std::span<const std::size_t> labels,
                             std::size_t blank = 0);

// Plain recursion over the three edit moves with no memo table.
std::size_t recursive_edit_distance(std::span<const std::size_t> hyp,
                                    std::span<const std::size_t> ref);

}  // namespace mocha::oracles

#endif  // MOCHA_ORACLES_BRUTE_FORCE_HPP_
