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

// Curriculum training. Stage 1 trains from random initialization with the
// offline encoder; stage 2 continues from stage-1 weights with the
// latency-controlled encoder and the synchronization term.

#ifndef MOCHA_TRAIN_HPP_
#define MOCHA_TRAIN_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "mocha/config.hpp"
#include "mocha/data.hpp"
#include "mocha/model.hpp"
#include "mocha/objectives.hpp"

namespace mocha {

class NonFiniteLossError : public Error {
 public:
  using Error::Error;
};

class Adam {
 public:
  explicit Adam(std::span<const NamedParam> params, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8);
  // Applies one update from the parameters' grad buffers.
  void step(double learning_rate);

 private:
  std::vector<NamedParam> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  double beta1_;
  double beta2_;
  double epsilon_;
  std::size_t t_ = 0;
};

// Rescales all grads so their joint L2 norm is at most `max_norm`; returns
// the norm before clipping.
double clip_grad_norm(std::span<const NamedParam> params, double max_norm);

// Mean loss over `batch`; with `with_grad` the parameter grads receive the
// gradient of that mean (added to whatever they hold).
LossBreakdown batch_objective(Model& model, std::span<const Utterance* const> batch,
                              const ForwardOptions& options, bool with_grad);

struct TrainOutputs {
  std::optional<std::filesystem::path> metrics_csv;
  // Receives a dataset file holding the offending batch on a non-finite loss.
  std::filesystem::path dump_dir = std::filesystem::temp_directory_path();
};

struct TrainResult {
  Model model;                          // best held-out model
  std::vector<double> heldout_history;  // initial evaluation first
  std::vector<double> step_losses;      // mean total per optimizer step
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;  // 0 means the initial model
};

// Throws Error for stage 2 without `seed`.
TrainResult train_stage(const TrainConfig& config, std::span<const Utterance> train,
                        std::span<const Utterance> heldout, std::optional<Model> seed,
                        const TrainOutputs& outputs = {});

}  // namespace mocha

#endif  // MOCHA_TRAIN_HPP_
