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

#include "mocha/numerics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace mocha {

std::vector<double> exclusive_cumprod(std::span<const double> x) {
  std::vector<double> out(x.size());
  double running = 1.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    out[j] = running;
    running *= x[j];
  }
  return out;
}

std::vector<double> cumsum(std::span<const double> x) {
  std::vector<double> out(x.size());
  double running = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    running += x[j];
    out[j] = running;
  }
  return out;
}

std::vector<double> moving_sum(std::span<const double> x, std::size_t back,
                               std::size_t forward) {
  const std::size_t n = x.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t lo = j >= back ? j - back : 0;
    const std::size_t hi = std::min(n - 1, j + forward);
    double s = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) s += x[k];
    out[j] = s;
  }
  return out;
}

double logsumexp(std::span<const double> x) {
  if (x.empty()) throw Error("logsumexp of an empty sequence");
  const double m = *std::max_element(x.begin(), x.end());
  if (m == kNegInf) return kNegInf;
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

LogProb logsumexp(std::span<const LogProb> x) {
  std::vector<double> values(x.size());
  std::transform(x.begin(), x.end(), values.begin(),
                 [](LogProb p) { return p.value; });
  return {logsumexp(values)};
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void init_uniform(Tensor& t, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.storage()) v = dist(rng);
}

double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

GradCheckResult grad_check(const Objective& f, std::span<const NamedParam> params,
                           double eps, double scale_floor) {
  if (!(eps > 0)) throw Error("grad_check: eps must be positive");
  if (!(scale_floor > 0)) throw Error("grad_check: scale_floor must be positive");
  const double base = f(true);
  if (!std::isfinite(base)) throw Error("grad_check: objective is not finite");

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) {
    const auto g = p.tensor->grad();
    analytic.emplace_back(g.begin(), g.end());
  }

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& t = *params[pi].tensor;
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double saved = t[k];
      t[k] = saved + eps;
      const double up = f(false);
      t[k] = saved - eps;
      const double down = f(false);
      t[k] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw Error(fmt::format("grad_check: objective not finite when perturbing {}[{}]",
                                params[pi].name, k));
      }
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[pi][k];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), scale_floor});
      ++result.checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = params[pi].name;
        result.worst_index = k;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace mocha
