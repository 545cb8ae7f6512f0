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

#include "mocha/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mocha/evaluate.hpp"

namespace mocha {
namespace {

void zero_grads(std::span<const NamedParam> params) {
  for (const NamedParam& p : params) p.tensor->zero_grad();
}

bool finite(const LossBreakdown& l) {
  return std::isfinite(l.mocha_nll) && std::isfinite(l.ctc) && std::isfinite(l.quantity) &&
         std::isfinite(l.sync) && std::isfinite(l.total);
}

}  // namespace

Adam::Adam(std::span<const NamedParam> params, double beta1, double beta2, double epsilon)
    : params_(params.begin(), params.end()), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
  for (const NamedParam& p : params_) {
    m_.emplace_back(p.tensor->size(), 0.0);
    v_.emplace_back(p.tensor->size(), 0.0);
  }
}

void Adam::step(double learning_rate) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t n = 0; n < params_.size(); ++n) {
    Tensor& w = *params_[n].tensor;
    if (!w.has_grad()) continue;
    const auto g = w.grad();
    auto& m = m_[n];
    auto& v = v_[n];
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
      w[k] -= learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + epsilon_);
    }
  }
}

double clip_grad_norm(std::span<const NamedParam> params, double max_norm) {
  double sq = 0.0;
  for (const NamedParam& p : params) {
    if (!p.tensor->has_grad()) continue;
    for (double g : p.tensor->grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (const NamedParam& p : params) {
      if (!p.tensor->has_grad()) continue;
      for (double& g : p.tensor->grad()) g *= s;
    }
  }
  return norm;
}

LossBreakdown batch_objective(Model& model, std::span<const Utterance* const> batch,
                              const ForwardOptions& options, bool with_grad) {
  LossBreakdown mean;
  if (batch.empty()) return mean;
  const double w = 1.0 / static_cast<double>(batch.size());
  for (const Utterance* utt : batch) {
    Graph g(with_grad);
    const UtteranceForward fwd = forward_utterance(g, model, utt->features, utt->labels, options);
    if (!finite(fwd.parts)) {
      throw NonFiniteLossError(fmt::format("non-finite loss on utterance {}", utt->id));
    }
    if (with_grad) {
      g.backward(fwd.total, w);
      g.accumulate_param_grads();
    }
    mean.mocha_nll += w * fwd.parts.mocha_nll;
    mean.ctc += w * fwd.parts.ctc;
    mean.quantity += w * fwd.parts.quantity;
    mean.sync += w * fwd.parts.sync;
    mean.total += w * fwd.parts.total;
  }
  return mean;
}

TrainResult train_stage(const TrainConfig& config, std::span<const Utterance> train,
                        std::span<const Utterance> heldout, std::optional<Model> seed,
                        const TrainOutputs& outputs) {
  config.validate();
  if (config.stage == Stage::kStage2 && !seed) {
    throw Error("stage2 training needs stage1 weights to start from");
  }
  if (train.empty() || heldout.empty()) throw Error("training needs train and held-out data");

  Rng rng(config.seed);
  TrainResult result;
  result.model = seed ? std::move(*seed) : Model::random(config.model, rng);
  Model& model = result.model;
  if (model.config.vocab_size != config.model.vocab_size ||
      model.config.feature_dim != config.model.feature_dim) {
    throw Error("seed model does not match the configured vocabulary or features");
  }

  ForwardOptions options;
  options.encoder = config.encoder_mode();
  options.weights = config.weights();
  options.label_smoothing = config.label_smoothing;
  options.dropout = config.dropout;
  options.energy_noise = config.energy_noise;
  options.rng = config.dropout > 0.0 || config.energy_noise > 0.0 ? &rng : nullptr;

  const auto params = model.parameters();
  Adam adam(params);
  std::optional<MetricsWriter> metrics;
  if (outputs.metrics_csv) metrics.emplace(*outputs.metrics_csv);

  auto heldout_loss = [&] {
    return teacher_forced_stats(model, heldout, options.encoder, options.weights,
                                config.label_smoothing)
        .mean_loss.total;
  };
  double best = heldout_loss();
  result.heldout_history.push_back(best);
  Model best_model = model;
  std::size_t stale = 0;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr =
        config.learning_rate *
        std::pow(config.lr_decay,
                 static_cast<double>(epoch > config.decay_start_epoch ? epoch - config.decay_start_epoch : 0));
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::vector<Utterance> masked;
      std::vector<const Utterance*> batch;
      if (config.specaug) {
        for (std::size_t k = begin; k < end; ++k) {
          Utterance u = train[order[k]];
          u.features = spec_augment(u.features, config.specaug_config, rng);
          masked.push_back(std::move(u));
        }
        for (const Utterance& u : masked) batch.push_back(&u);
      } else {
        for (std::size_t k = begin; k < end; ++k) batch.push_back(&train[order[k]]);
      }

      zero_grads(params);
      LossBreakdown loss;
      try {
        loss = batch_objective(model, batch, options, /*with_grad=*/true);
      } catch (const NonFiniteLossError& e) {
        std::vector<Utterance> dump;
        for (const Utterance* u : batch) dump.push_back(*u);
        const auto path = outputs.dump_dir / fmt::format("nonfinite_step{}.data", step + 1);
        save_dataset(path, dump);
        throw NonFiniteLossError(fmt::format("{} at step {}; batch written to {}", e.what(),
                                             step + 1, path.string()));
      }
      clip_grad_norm(params, config.clip_norm);
      adam.step(lr);
      ++step;
      result.step_losses.push_back(loss.total);
      if (metrics) metrics->write(step, loss);
    }
    zero_grads(params);
    result.epochs_run = epoch;

    const double current = heldout_loss();
    result.heldout_history.push_back(current);
    spdlog::info("{} epoch {} lr {:.3g} train {:.4f} heldout {:.4f}", to_string(config.stage),
                 epoch, lr, result.step_losses.back(), current);
    if (current < best) {
      best = current;
      best_model = model;
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= config.patience) {
      spdlog::info("early stop after {} epochs without improvement", stale);
      break;
    }
  }
  result.model = std::move(best_model);
  for (const NamedParam& p : result.model.parameters()) p.tensor->clear_grad();
  return result;
}

}  // namespace mocha
