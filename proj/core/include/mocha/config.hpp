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

// Plain-text key=value training configuration.

#ifndef MOCHA_CONFIG_HPP_
#define MOCHA_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mocha/data.hpp"
#include "mocha/model.hpp"
#include "mocha/objectives.hpp"

namespace mocha {

enum class Stage { kStage1, kStage2 };

Stage parse_stage(std::string_view name);
std::string_view to_string(Stage stage);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

struct TrainConfig {
  Stage stage = Stage::kStage1;
  ModelConfig model;
  ToyTaskSpec task;
  // Unset encoder kind follows the stage: BLSTM for stage 1, LC-BLSTM for stage 2.
  std::optional<EncoderKind> encoder_kind;
  ChunkConfig chunk{8, 4};  // raw frames
  // Unset weights take the stage defaults.
  std::optional<double> lambda_ctc;
  std::optional<double> lambda_qua;
  std::optional<double> lambda_sync;
  double label_smoothing = kDefaultLabelSmoothing;

  double learning_rate = 1e-3;
  double lr_decay = 0.9;
  std::size_t decay_start_epoch = 10;
  double clip_norm = 5.0;
  double dropout = 0.0;
  double energy_noise = 0.0;
  std::size_t batch_size = 4;
  std::size_t epochs = 30;
  std::size_t patience = 5;

  bool specaug = false;
  SpecAugmentConfig specaug_config{2, 4, 2, 2};

  std::uint64_t seed = 1;
  std::uint64_t data_seed = 1000;
  std::size_t train_size = 500;
  std::size_t heldout_size = 100;
  std::string seed_checkpoint;

  LossWeights weights() const;
  EncoderMode encoder_mode() const;

  // Applies one key=value assignment; unknown keys and malformed values throw.
  void set(std::string_view key, std::string_view value);
  // Every key with its current value, in a fixed order. Unset optionals are
  // omitted.
  KeyValues dump() const;
  // Range and cross-field checks.
  void validate() const;
};

// Reads `key = value` lines; '#' starts a comment.
KeyValues read_key_values(const std::filesystem::path& path);
KeyValues parse_key_values(std::string_view text);
// "key=value" -> pair; throws on a missing '='.
std::pair<std::string, std::string> split_assignment(std::string_view text);

TrainConfig load_train_config(const std::filesystem::path& path, const KeyValues& overrides = {});

KeyValues model_config_dump(const ModelConfig& config);
void set_model_config(ModelConfig& config, std::string_view key, std::string_view value);

}  // namespace mocha

#endif  // MOCHA_CONFIG_HPP_
