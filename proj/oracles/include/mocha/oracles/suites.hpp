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

// Self-contained verification suites shared by the selftest command, the
// unit tests and the acceptance runner. Each suite draws its own random
// instances from a fixed seed and compares the library against the
// brute-force references in brute_force.hpp.

#ifndef MOCHA_ORACLES_SUITES_HPP_
#define MOCHA_ORACLES_SUITES_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "mocha/tensor.hpp"

namespace mocha::oracles {

struct SuiteReport {
  std::string name;
  bool passed = false;
  std::size_t cases = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
  double seconds = 0.0;
  std::string detail;
};

inline constexpr double kCtcLossTolerance = 1e-9;
inline constexpr double kCtcBestPathTolerance = 1e-12;
inline constexpr double kAlignmentTolerance = 1e-10;
inline constexpr double kGradientTolerance = 1e-4;
// Relative errors are taken against max(|analytic|, |numeric|, floor).
inline constexpr double kGradientScaleFloor = 1e-5;
inline constexpr double kGradientStep = 1e-5;
inline constexpr double kChunkTolerance = 1e-12;

// Random T <= 6, U <= 3, V <= 4 instances: forward-backward against the
// enumerated path sum, forced alignment against the enumerated best path.
SuiteReport ctc_oracle_suite(std::size_t instances = 200, std::uint64_t seed = 11);

// Random U <= 4, T <= 8 selection probabilities: expected_alignment against
// the enumerated stopping paths.
SuiteReport alignment_oracle_suite(std::size_t instances = 200, std::uint64_t seed = 12);

// The same suite against any candidate implementation of the marginal.
using AlignmentFn = std::function<Tensor(const Tensor&)>;
SuiteReport alignment_oracle_suite(const AlignmentFn& candidate, std::size_t instances = 200,
                                   std::uint64_t seed = 12);

// Central differences of the full four-term objective on a two-utterance
// toy batch, every parameter entry of a small model.
SuiteReport gradient_suite(std::uint64_t seed = 13);

// Single-chunk LC-BLSTM against a direct bidirectional pass, and lookahead
// isolation under perturbation of frames past each chunk's window.
SuiteReport chunk_equivalence_suite(std::uint64_t seed = 14);

// Suites named "ctc", "attention", "gradient", "encoder" whose name
// contains `filter` (all when empty).
std::vector<SuiteReport> run_suites(std::string_view filter = {});
std::vector<std::string> suite_names();

}  // namespace mocha::oracles

#endif  // MOCHA_ORACLES_SUITES_HPP_
