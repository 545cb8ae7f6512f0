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

// Synthetic monotonic transduction data and feature masking.

#ifndef MOCHA_DATA_HPP_
#define MOCHA_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mocha/numerics.hpp"
#include "mocha/tensor.hpp"

namespace mocha {

struct ToyTaskSpec {
  std::size_t num_symbols = 6;  // ids kFirstSymbol .. kFirstSymbol + num_symbols - 1
  std::size_t feature_dim = 8;
  std::size_t min_duration = 4;  // raw frames per token
  std::size_t max_duration = 8;
  std::size_t min_tokens = 3;
  std::size_t max_tokens = 8;
  double noise = 0.3;
  std::uint64_t template_seed = 7;  // fixes the per-symbol templates

  void validate() const;
  std::size_t vocab_size() const;  // blank + eos + symbols
};

struct Utterance {
  std::string id;
  Tensor features;                  // T0 x feature_dim
  std::vector<std::size_t> labels;  // symbols only, no eos
  std::vector<std::size_t> starts;  // 1-based raw start frame of each token
};

// Per-symbol feature templates (num_symbols x feature_dim).
Tensor toy_templates(const ToyTaskSpec& spec);

// `count` utterances; adjacent labels never repeat. Deterministic in
// (spec, seed).
std::vector<Utterance> generate_toy_batch(const ToyTaskSpec& spec, std::size_t count,
                                          std::uint64_t seed);

void save_dataset(const std::filesystem::path& path, const std::vector<Utterance>& data);
std::vector<Utterance> load_dataset(const std::filesystem::path& path);

struct SpecAugmentConfig {
  std::size_t freq_param = 0;  // F: widths drawn from [0, F]
  std::size_t time_param = 0;  // T: widths drawn from [0, T]
  std::size_t num_freq_masks = 2;
  std::size_t num_time_masks = 2;
};

// Returns a masked copy of `features` with masked cells set to zero.
Tensor spec_augment(const Tensor& features, const SpecAugmentConfig& cfg, Rng& rng);

}  // namespace mocha

#endif  // MOCHA_DATA_HPP_
