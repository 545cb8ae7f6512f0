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

#include "mocha/oracles/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "mocha/attention.hpp"
#include "mocha/ctc.hpp"
#include "mocha/data.hpp"
#include "mocha/encoder.hpp"
#include "mocha/model.hpp"
#include "mocha/numerics.hpp"
#include "mocha/oracles/brute_force.hpp"
#include "mocha/train.hpp"

namespace mocha::oracles {
namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::size_t draw(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Tensor random_log_posteriors(Rng& rng, std::size_t frames, std::size_t vocab) {
  std::normal_distribution<double> normal(0.0, 2.0);
  Tensor lp = Tensor::matrix(frames, vocab);
  for (std::size_t t = 0; t < frames; ++t) {
    auto row = lp.row_span(t);
    for (double& x : row) x = normal(rng);
    const double norm = logsumexp(std::span<const double>(row));
    for (double& x : row) x -= norm;
  }
  return lp;
}

Tensor random_normal(Rng& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor t = Tensor::matrix(rows, cols);
  for (double& x : t.data()) x = normal(rng);
  return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  double err = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) err = std::max(err, std::abs(a[k] - b[k]));
  return err;
}

Tensor direct_blstm(Graph& g, std::vector<EncoderLayer>& layers, const Tensor& frames) {
  Var x = g.constant(frames);
  for (EncoderLayer& layer : layers) {
    const LstmOutput fwd =
        lstm_forward(g, layer.forward, x, zero_state(g, layer.forward.hidden()));
    const LstmOutput bwd = lstm_forward(g, layer.backward, x,
                                        zero_state(g, layer.backward.hidden()), /*reverse=*/true);
    x = add(fwd.outputs, bwd.outputs);
  }
  return x.value();
}

Tensor chunked_blstm(std::vector<EncoderLayer>& layers, const Tensor& frames, ChunkConfig cfg) {
  Graph g(false);
  return lc_blstm_forward(g, layers, g.constant(frames), cfg).memories.value();
}

}  // namespace

SuiteReport ctc_oracle_suite(std::size_t instances, std::uint64_t seed) {
  Stopwatch clock;
  SuiteReport report;
  report.name = "ctc";
  report.tolerance = kCtcLossTolerance;
  Rng rng(seed);
  double loss_err = 0.0;
  double best_err = 0.0;
  std::size_t failures = 0;
  std::size_t infeasible = 0;
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t frames = draw(rng, 1, 6);
    const std::size_t vocab = draw(rng, 2, 4);
    const std::size_t count = draw(rng, 0, std::min<std::size_t>(3, frames));
    std::vector<std::size_t> labels(count);
    for (auto& l : labels) l = draw(rng, 1, vocab - 1);
    const Tensor lp = random_log_posteriors(rng, frames, vocab);
    const CtcEnumeration truth = enumerate_ctc(lp, labels);
    ++report.cases;

    if (ctc_min_frames(labels) > frames) {
      ++infeasible;
      bool threw = false;
      try {
        (void)ctc_loss(lp, labels);
      } catch (const CtcInfeasibleError&) {
        threw = true;
      }
      if (!threw || truth.feasible_paths != 0) ++failures;
      continue;
    }
    const CtcResult result = ctc_loss(lp, labels);
    const double le = std::abs(result.loss + truth.log_total);
    const std::vector<std::size_t> path = ctc_forced_align(lp, labels);
    const double be = std::abs(path_log_probability(lp, path) - truth.log_best);
    const bool collapses = ctc_collapse(path) == labels && path.size() == frames;
    loss_err = std::max(loss_err, le);
    best_err = std::max(best_err, be);
    if (!(le <= kCtcLossTolerance) || !(be <= kCtcBestPathTolerance) || !collapses) ++failures;
  }
  report.max_error = loss_err;
  report.passed = failures == 0;
  report.seconds = clock.seconds();
  report.detail = fmt::format(
      "{} instances ({} infeasible), max |loss - enum| {:.3g} (tol {:g}), max |best path - enum| "
      "{:.3g} (tol {:g}), {} failures",
      report.cases, infeasible, loss_err, kCtcLossTolerance, best_err, kCtcBestPathTolerance,
      failures);
  return report;
}

SuiteReport alignment_oracle_suite(std::size_t instances, std::uint64_t seed) {
  return alignment_oracle_suite([](const Tensor& p) { return expected_alignment(p); }, instances,
                                seed);
}

SuiteReport alignment_oracle_suite(const AlignmentFn& candidate, std::size_t instances,
                                   std::uint64_t seed) {
  Stopwatch clock;
  SuiteReport report;
  report.name = "attention";
  report.tolerance = kAlignmentTolerance;
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t failures = 0;
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t rows = draw(rng, 1, 4);
    const std::size_t frames = draw(rng, 1, 8);
    Tensor p = Tensor::matrix(rows, frames);
    for (double& x : p.data()) {
      const double kind = unit(rng);
      const double u = unit(rng);
      // Mostly interior values, with some mass near either end.
      x = kind < 0.7 ? u : (kind < 0.85 ? 1e-3 * u : 1.0 - 1e-3 * u);
      x = clamp_prob(x);
    }
    const double err = max_abs_diff(candidate(p), enumerated_alignment(p));
    report.max_error = std::max(report.max_error, err);
    ++report.cases;
    if (!(err <= kAlignmentTolerance)) ++failures;
  }
  report.passed = failures == 0;
  report.seconds = clock.seconds();
  report.detail = fmt::format("{} instances, max |alpha - enum| {:.3g} (tol {:g}), {} failures",
                              report.cases, report.max_error, kAlignmentTolerance, failures);
  return report;
}

SuiteReport gradient_suite(std::uint64_t seed) {
  Stopwatch clock;
  SuiteReport report;
  report.name = "gradient";
  report.tolerance = kGradientTolerance;

  ToyTaskSpec spec;
  spec.num_symbols = 3;
  spec.feature_dim = 3;
  spec.min_duration = 2;
  spec.max_duration = 4;
  spec.min_tokens = 2;
  spec.max_tokens = 3;
  ModelConfig config;
  config.feature_dim = spec.feature_dim;
  config.subsample = 2;
  config.encoder_hidden = 4;
  config.vocab_size = spec.vocab_size();
  config.embed_dim = 3;
  config.decoder_hidden = 4;
  config.attention_dim = 3;
  config.chunk_width = 2;

  Rng rng(seed);
  Model model = Model::random(config, rng);
  const std::vector<Utterance> data = generate_toy_batch(spec, 2, seed);
  const std::vector<const Utterance*> batch{&data[0], &data[1]};

  ForwardOptions options;
  options.encoder = {EncoderKind::kLcBlstm, ChunkConfig{4, 2}};
  options.weights = {0.3, 2.0, 1.0};
  options.label_smoothing = kDefaultLabelSmoothing;

  const std::vector<NamedParam> params = model.parameters();
  LossBreakdown parts;
  const Objective objective = [&](bool with_grad) {
    if (with_grad) {
      for (const NamedParam& p : params) p.tensor->zero_grad();
    }
    parts = batch_objective(model, batch, options, with_grad);
    return parts.total;
  };
  const LossBreakdown at_start = (objective(false), parts);
  const GradCheckResult check = grad_check(objective, params, kGradientStep, kGradientScaleFloor);

  const bool all_terms = at_start.mocha_nll > 0.0 && at_start.ctc > 0.0 &&
                         at_start.quantity > 0.0 && at_start.sync > 0.0;
  report.cases = check.checked;
  report.max_error = check.max_rel_error;
  report.passed = all_terms && check.max_rel_error <= kGradientTolerance;
  report.seconds = clock.seconds();
  report.detail = fmt::format(
      "{} entries, terms nll {:.4g} ctc {:.4g} qua {:.4g} sync {:.4g}, max rel error {:.3g} "
      "(tol {:g}, floor {:g}) at {}[{}] analytic {:.6g} numeric {:.6g}",
      check.checked, at_start.mocha_nll, at_start.ctc, at_start.quantity, at_start.sync,
      check.max_rel_error, kGradientTolerance, kGradientScaleFloor, check.worst_param, check.worst_index,
      check.analytic, check.numeric);
  return report;
}

SuiteReport chunk_equivalence_suite(std::uint64_t seed) {
  Stopwatch clock;
  SuiteReport report;
  report.name = "encoder";
  report.tolerance = kChunkTolerance;
  Rng rng(seed);
  constexpr std::size_t kInput = 5;
  constexpr std::size_t kHidden = 6;
  constexpr std::size_t kFrames = 13;
  std::vector<EncoderLayer> layers;
  layers.push_back({LstmWeights::random(kInput, kHidden, rng),
                    LstmWeights::random(kInput, kHidden, rng)});
  layers.push_back({LstmWeights::random(kHidden, kHidden, rng),
                    LstmWeights::random(kHidden, kHidden, rng)});
  const Tensor frames = random_normal(rng, kFrames, kInput);

  Graph g(false);
  const Tensor direct = direct_blstm(g, layers, frames);
  const double single_chunk = max_abs_diff(chunked_blstm(layers, frames, {kFrames, 0}), direct);
  const double offline = max_abs_diff(chunked_blstm(layers, frames, ChunkConfig::offline()), direct);
  report.cases = 2;
  report.max_error = std::max(single_chunk, offline);

  const ChunkConfig configs[] = {{1, 0}, {2, 1}, {3, 0}, {4, 2}, {5, 3}, {6, 20}};
  std::size_t leaks = 0;
  for (const ChunkConfig& cfg : configs) {
    const Tensor base = chunked_blstm(layers, frames, cfg);
    for (const ChunkSpan& span : chunk_schedule(kFrames, cfg)) {
      if (span.window_end >= kFrames) continue;
      Tensor perturbed = frames;
      std::normal_distribution<double> normal(0.0, 3.0);
      for (std::size_t t = span.window_end; t < kFrames; ++t) {
        for (double& x : perturbed.row_span(t)) x += normal(rng);
      }
      const Tensor out = chunked_blstm(layers, perturbed, cfg);
      ++report.cases;
      for (std::size_t t = span.begin; t < span.end; ++t) {
        const auto a = base.row_span(t);
        const auto b = out.row_span(t);
        if (!std::equal(a.begin(), a.end(), b.begin(), b.end())) {
          ++leaks;
          break;
        }
      }
    }
  }
  report.passed = report.max_error <= kChunkTolerance && leaks == 0;
  report.seconds = clock.seconds();
  report.detail = fmt::format(
      "single chunk vs direct {:.3g}, offline vs direct {:.3g} (tol {:g}); {} perturbed chunks, "
      "{} changed",
      single_chunk, offline, kChunkTolerance, report.cases - 2, leaks);
  return report;
}

std::vector<std::string> suite_names() { return {"ctc", "attention", "gradient", "encoder"}; }

std::vector<SuiteReport> run_suites(std::string_view filter) {
  std::vector<SuiteReport> reports;
  const auto wanted = [&](std::string_view name) {
    return filter.empty() || name.find(filter) != std::string_view::npos;
  };
  if (wanted("ctc")) reports.push_back(ctc_oracle_suite());
  if (wanted("attention")) reports.push_back(alignment_oracle_suite());
  if (wanted("gradient")) reports.push_back(gradient_suite());
  if (wanted("encoder")) reports.push_back(chunk_equivalence_suite());
  return reports;
}

}  // namespace mocha::oracles
