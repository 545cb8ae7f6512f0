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

#ifndef MOCHA_NUMERICS_HPP_
#define MOCHA_NUMERICS_HPP_

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mocha/tensor.hpp"

namespace mocha {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Every random draw in the library goes through one of these, seeded by the
// caller.
using Rng = std::mt19937_64;

// Selection probabilities are kept inside [kProbFloor, 1 - kProbFloor]
// wherever they feed products or ratios.
inline constexpr double kProbFloor = 1e-10;

// Natural-log probability. -inf is the additive identity under logsumexp.
struct LogProb {
  double value = kNegInf;

  static LogProb zero() { return {kNegInf}; }
  static LogProb one() { return {0.0}; }
  friend bool operator==(LogProb, LogProb) = default;
};

// out[j] = prod_{l<j} x[l]; out[0] = 1.
std::vector<double> exclusive_cumprod(std::span<const double> x);

// Inclusive prefix sum.
std::vector<double> cumsum(std::span<const double> x);

// out[j] = sum_{k=j-back}^{j+forward} x[k]; indices outside [0, n) add 0.
std::vector<double> moving_sum(std::span<const double> x, std::size_t back,
                               std::size_t forward);

// Max-shifted log(sum(exp(x))). Throws on empty input.
double logsumexp(std::span<const double> x);
LogProb logsumexp(std::span<const LogProb> x);

// Two-argument form used inside trellis recursions.
inline double log_add(double a, double b);

double sigmoid(double x);

// Fills `t` with draws from Uniform[-bound, bound].
void init_uniform(Tensor& t, double bound, Rng& rng);
double clamp_prob(double p);

// A parameter tensor paired with a stable name, used by gradient checks,
// optimizers and checkpoints.
struct NamedParam {
  std::string name;
  Tensor* tensor = nullptr;
};

// Evaluates a scalar objective at the current parameter values. When
// `with_grad` is true it must also overwrite each parameter's grad buffer
// with d objective / d parameter.
using Objective = std::function<double(bool with_grad)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

// Central-difference check: returns the maximum over all parameter entries
// of |analytic - numeric| / max(|analytic|, |numeric|, scale_floor). The
// floor keeps entries whose gradient is at the level of the difference
// quotient's rounding noise from dominating. Throws if the objective is
// non-finite at any evaluation point.
GradCheckResult grad_check(const Objective& f, std::span<const NamedParam> params,
                           double eps = 1e-5, double scale_floor = 1e-8);

// ---------------------------------------------------------------------------

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

}  // namespace mocha

#endif  // MOCHA_NUMERICS_HPP_
