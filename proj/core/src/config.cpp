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

#include "mocha/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace mocha {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw Error(fmt::format("config: bad value '{}' for key '{}'", value, key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error(fmt::format("config: bad boolean '{}' for key '{}'", value, key));
}

std::string format_double(double v) { return fmt::format("{}", v); }

}  // namespace

Stage parse_stage(std::string_view name) {
  if (name == "stage1") return Stage::kStage1;
  if (name == "stage2") return Stage::kStage2;
  throw Error(fmt::format("unknown stage '{}' (expected stage1 or stage2)", name));
}

std::string_view to_string(Stage stage) { return stage == Stage::kStage1 ? "stage1" : "stage2"; }

KeyValues model_config_dump(const ModelConfig& c) {
  return {{"feature_dim", std::to_string(c.feature_dim)},
          {"subsample", std::to_string(c.subsample)},
          {"encoder_layers", std::to_string(c.encoder_layers)},
          {"encoder_hidden", std::to_string(c.encoder_hidden)},
          {"vocab_size", std::to_string(c.vocab_size)},
          {"embed_dim", std::to_string(c.embed_dim)},
          {"decoder_hidden", std::to_string(c.decoder_hidden)},
          {"attention_dim", std::to_string(c.attention_dim)},
          {"chunk_width", std::to_string(c.chunk_width)},
          {"energy_offset", format_double(c.energy_offset)}};
}

void set_model_config(ModelConfig& c, std::string_view key, std::string_view value) {
  using S = std::size_t;
  if (key == "feature_dim") c.feature_dim = parse_number<S>(key, value);
  else if (key == "subsample") c.subsample = parse_number<S>(key, value);
  else if (key == "encoder_layers") c.encoder_layers = parse_number<S>(key, value);
  else if (key == "encoder_hidden") c.encoder_hidden = parse_number<S>(key, value);
  else if (key == "vocab_size") c.vocab_size = parse_number<S>(key, value);
  else if (key == "embed_dim") c.embed_dim = parse_number<S>(key, value);
  else if (key == "decoder_hidden") c.decoder_hidden = parse_number<S>(key, value);
  else if (key == "attention_dim") c.attention_dim = parse_number<S>(key, value);
  else if (key == "chunk_width") c.chunk_width = parse_number<S>(key, value);
  else if (key == "energy_offset") c.energy_offset = parse_number<double>(key, value);
  else throw Error(fmt::format("unknown model config key '{}'", key));
}

LossWeights TrainConfig::weights() const {
  LossWeights w = stage == Stage::kStage1 ? LossWeights::stage1() : LossWeights::stage2();
  if (lambda_ctc) w.ctc = *lambda_ctc;
  if (lambda_qua) w.quantity = *lambda_qua;
  if (lambda_sync) w.sync = *lambda_sync;
  return w;
}

EncoderMode TrainConfig::encoder_mode() const {
  EncoderMode mode;
  mode.kind = encoder_kind.value_or(stage == Stage::kStage1 ? EncoderKind::kBlstm
                                                            : EncoderKind::kLcBlstm);
  mode.chunk = chunk;
  return mode;
}

void TrainConfig::set(std::string_view key, std::string_view value) {
  using S = std::size_t;
  using U64 = std::uint64_t;
  if (key == "stage") stage = parse_stage(value);
  else if (key == "encoder") encoder_kind = parse_encoder_kind(value);
  else if (key == "chunk_nc") chunk.n_c = parse_number<S>(key, value);
  else if (key == "chunk_nr") chunk.n_r = parse_number<S>(key, value);
  else if (key == "lambda_ctc") lambda_ctc = parse_number<double>(key, value);
  else if (key == "lambda_qua") lambda_qua = parse_number<double>(key, value);
  else if (key == "lambda_sync") lambda_sync = parse_number<double>(key, value);
  else if (key == "label_smoothing") label_smoothing = parse_number<double>(key, value);
  else if (key == "learning_rate") learning_rate = parse_number<double>(key, value);
  else if (key == "lr_decay") lr_decay = parse_number<double>(key, value);
  else if (key == "decay_start_epoch") decay_start_epoch = parse_number<S>(key, value);
  else if (key == "clip_norm") clip_norm = parse_number<double>(key, value);
  else if (key == "dropout") dropout = parse_number<double>(key, value);
  else if (key == "energy_noise") energy_noise = parse_number<double>(key, value);
  else if (key == "batch_size") batch_size = parse_number<S>(key, value);
  else if (key == "epochs") epochs = parse_number<S>(key, value);
  else if (key == "patience") patience = parse_number<S>(key, value);
  else if (key == "specaug") specaug = parse_bool(key, value);
  else if (key == "specaug_F") specaug_config.freq_param = parse_number<S>(key, value);
  else if (key == "specaug_T") specaug_config.time_param = parse_number<S>(key, value);
  else if (key == "specaug_freq_masks") specaug_config.num_freq_masks = parse_number<S>(key, value);
  else if (key == "specaug_time_masks") specaug_config.num_time_masks = parse_number<S>(key, value);
  else if (key == "seed") seed = parse_number<U64>(key, value);
  else if (key == "data_seed") data_seed = parse_number<U64>(key, value);
  else if (key == "train_size") train_size = parse_number<S>(key, value);
  else if (key == "heldout_size") heldout_size = parse_number<S>(key, value);
  else if (key == "seed_checkpoint") seed_checkpoint = std::string(value);
  else if (key == "num_symbols") {
    task.num_symbols = parse_number<S>(key, value);
    model.vocab_size = task.vocab_size();
  } else if (key == "feature_dim") {
    task.feature_dim = parse_number<S>(key, value);
    model.feature_dim = task.feature_dim;
  } else if (key == "min_duration") task.min_duration = parse_number<S>(key, value);
  else if (key == "max_duration") task.max_duration = parse_number<S>(key, value);
  else if (key == "min_tokens") task.min_tokens = parse_number<S>(key, value);
  else if (key == "max_tokens") task.max_tokens = parse_number<S>(key, value);
  else if (key == "noise") task.noise = parse_number<double>(key, value);
  else if (key == "template_seed") task.template_seed = parse_number<U64>(key, value);
  else if (key == "vocab_size") throw Error("vocab_size is derived from num_symbols");
  else set_model_config(model, key, value);
}

KeyValues TrainConfig::dump() const {
  KeyValues kv = {{"stage", std::string(to_string(stage))}};
  if (encoder_kind) kv.emplace_back("encoder", std::string(to_string(*encoder_kind)));
  kv.emplace_back("chunk_nc", std::to_string(chunk.n_c));
  kv.emplace_back("chunk_nr", std::to_string(chunk.n_r));
  if (lambda_ctc) kv.emplace_back("lambda_ctc", format_double(*lambda_ctc));
  if (lambda_qua) kv.emplace_back("lambda_qua", format_double(*lambda_qua));
  if (lambda_sync) kv.emplace_back("lambda_sync", format_double(*lambda_sync));
  kv.emplace_back("label_smoothing", format_double(label_smoothing));
  kv.emplace_back("learning_rate", format_double(learning_rate));
  kv.emplace_back("lr_decay", format_double(lr_decay));
  kv.emplace_back("decay_start_epoch", std::to_string(decay_start_epoch));
  kv.emplace_back("clip_norm", format_double(clip_norm));
  kv.emplace_back("dropout", format_double(dropout));
  kv.emplace_back("energy_noise", format_double(energy_noise));
  kv.emplace_back("batch_size", std::to_string(batch_size));
  kv.emplace_back("epochs", std::to_string(epochs));
  kv.emplace_back("patience", std::to_string(patience));
  kv.emplace_back("specaug", specaug ? "true" : "false");
  kv.emplace_back("specaug_F", std::to_string(specaug_config.freq_param));
  kv.emplace_back("specaug_T", std::to_string(specaug_config.time_param));
  kv.emplace_back("specaug_freq_masks", std::to_string(specaug_config.num_freq_masks));
  kv.emplace_back("specaug_time_masks", std::to_string(specaug_config.num_time_masks));
  kv.emplace_back("seed", std::to_string(seed));
  kv.emplace_back("data_seed", std::to_string(data_seed));
  kv.emplace_back("train_size", std::to_string(train_size));
  kv.emplace_back("heldout_size", std::to_string(heldout_size));
  if (!seed_checkpoint.empty()) kv.emplace_back("seed_checkpoint", seed_checkpoint);
  kv.emplace_back("num_symbols", std::to_string(task.num_symbols));
  kv.emplace_back("min_duration", std::to_string(task.min_duration));
  kv.emplace_back("max_duration", std::to_string(task.max_duration));
  kv.emplace_back("min_tokens", std::to_string(task.min_tokens));
  kv.emplace_back("max_tokens", std::to_string(task.max_tokens));
  kv.emplace_back("noise", format_double(task.noise));
  kv.emplace_back("template_seed", std::to_string(task.template_seed));
  for (auto& [k, v] : model_config_dump(model)) {
    if (k != "vocab_size") kv.emplace_back(k, v);
  }
  return kv;
}

void TrainConfig::validate() const {
  model.validate();
  task.validate();
  weights().validate();
  if (model.vocab_size != task.vocab_size() || model.feature_dim != task.feature_dim) {
    throw Error("config: model vocabulary/feature size disagrees with the task");
  }
  if (chunk.n_c == 0) throw Error("config: chunk_nc must be >= 1");
  if (batch_size == 0) throw Error("config: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw Error("config: learning_rate must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw Error("config: lr_decay must be in (0, 1]");
  if (!(clip_norm > 0.0)) throw Error("config: clip_norm must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("config: dropout must be in [0, 1)");
  if (!(energy_noise >= 0.0)) throw Error("config: energy_noise must be >= 0");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw Error("config: label_smoothing must be in [0, 1)");
  }
  if (specaug && stage != Stage::kStage2) throw Error("config: specaug is only allowed in stage2");
  if (specaug && specaug_config.freq_param > task.feature_dim) {
    throw Error("config: specaug_F exceeds the feature dimension");
  }
  if (heldout_size == 0 || train_size == 0) throw Error("config: empty train or held-out set");
}

std::pair<std::string, std::string> split_assignment(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) {
    throw Error(fmt::format("expected key=value, got '{}'", text));
  }
  const auto key = trim(text.substr(0, eq));
  if (key.empty()) throw Error(fmt::format("empty key in '{}'", text));
  return {std::string(key), std::string(trim(text.substr(eq + 1)))};
}

KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    kv.push_back(split_assignment(view));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open config {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str());
}

TrainConfig load_train_config(const std::filesystem::path& path, const KeyValues& overrides) {
  TrainConfig cfg;
  for (const auto& [k, v] : read_key_values(path)) cfg.set(k, v);
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  cfg.validate();
  return cfg;
}

}  // namespace mocha
