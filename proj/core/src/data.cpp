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

#include "mocha/data.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "mocha/model.hpp"

namespace mocha {
namespace {

constexpr const char* kDatasetMagic = "mocha-data v1";

std::size_t uniform_count(std::size_t lo, std::size_t hi, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

template <typename T>
T read_field(std::istream& in, const char* what) {
  T value{};
  if (!(in >> value)) throw Error(fmt::format("dataset: malformed {}", what));
  return value;
}

}  // namespace

void ToyTaskSpec::validate() const {
  if (num_symbols < 2) throw Error("toy task needs at least two symbols to avoid repeats");
  if (feature_dim == 0) throw Error("toy task: feature_dim must be >= 1");
  if (min_duration == 0 || min_duration > max_duration) {
    throw Error("toy task: need 1 <= min_duration <= max_duration");
  }
  if (min_tokens == 0 || min_tokens > max_tokens) {
    throw Error("toy task: need 1 <= min_tokens <= max_tokens");
  }
  if (!(noise >= 0.0)) throw Error("toy task: noise must be >= 0");
}

std::size_t ToyTaskSpec::vocab_size() const { return kFirstSymbol + num_symbols; }

Tensor toy_templates(const ToyTaskSpec& spec) {
  Rng rng(spec.template_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor t = Tensor::matrix(spec.num_symbols, spec.feature_dim);
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = normal(rng);
  return t;
}

std::vector<Utterance> generate_toy_batch(const ToyTaskSpec& spec, std::size_t count,
                                          std::uint64_t seed) {
  spec.validate();
  const Tensor templates = toy_templates(spec);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Utterance> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    Utterance utt;
    utt.id = fmt::format("utt{:05d}", n);
    const std::size_t tokens = uniform_count(spec.min_tokens, spec.max_tokens, rng);
    std::vector<std::size_t> durations;
    std::size_t frames = 0;
    for (std::size_t i = 0; i < tokens; ++i) {
      std::size_t sym = uniform_count(0, spec.num_symbols - 1, rng);
      if (i > 0 && kFirstSymbol + sym == utt.labels.back()) {
        sym = (sym + 1 + uniform_count(0, spec.num_symbols - 2, rng)) % spec.num_symbols;
      }
      utt.labels.push_back(kFirstSymbol + sym);
      durations.push_back(uniform_count(spec.min_duration, spec.max_duration, rng));
      utt.starts.push_back(frames + 1);
      frames += durations.back();
    }
    utt.features = Tensor::matrix(frames, spec.feature_dim);
    std::size_t row = 0;
    for (std::size_t i = 0; i < tokens; ++i) {
      const auto tmpl = templates.row_span(utt.labels[i] - kFirstSymbol);
      for (std::size_t d = 0; d < durations[i]; ++d, ++row) {
        for (std::size_t f = 0; f < spec.feature_dim; ++f) {
          utt.features.at(row, f) = tmpl[f] + spec.noise * normal(rng);
        }
      }
    }
    out.push_back(std::move(utt));
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const std::vector<Utterance>& data) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write dataset {}", path.string()));
  out << kDatasetMagic << '\n' << data.size() << '\n';
  for (const Utterance& u : data) {
    out << fmt::format("utt {} {} {} {}\n", u.id, u.features.rows(), u.features.cols(),
                       u.labels.size());
    out << fmt::format("labels {}\n", fmt::join(u.labels, " "));
    out << fmt::format("starts {}\n", fmt::join(u.starts, " "));
    for (std::size_t r = 0; r < u.features.rows(); ++r) {
      out << fmt::format("{:a}\n", fmt::join(u.features.row_span(r), " "));
    }
  }
  if (!out) throw Error(fmt::format("failed writing dataset {}", path.string()));
}

std::vector<Utterance> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open dataset {}", path.string()));
  std::string magic;
  std::getline(in, magic);
  if (magic != kDatasetMagic) {
    throw Error(fmt::format("{}: expected header '{}', found '{}'", path.string(), kDatasetMagic,
                            magic));
  }
  const auto count = read_field<std::size_t>(in, "utterance count");
  std::vector<Utterance> data;
  data.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    Utterance u;
    if (read_field<std::string>(in, "record tag") != "utt") throw Error("dataset: expected 'utt'");
    u.id = read_field<std::string>(in, "id");
    const auto rows = read_field<std::size_t>(in, "frame count");
    const auto cols = read_field<std::size_t>(in, "feature dim");
    const auto tokens = read_field<std::size_t>(in, "token count");
    if (read_field<std::string>(in, "labels tag") != "labels") throw Error("dataset: expected 'labels'");
    for (std::size_t i = 0; i < tokens; ++i) u.labels.push_back(read_field<std::size_t>(in, "label"));
    if (read_field<std::string>(in, "starts tag") != "starts") throw Error("dataset: expected 'starts'");
    for (std::size_t i = 0; i < tokens; ++i) u.starts.push_back(read_field<std::size_t>(in, "start"));
    u.features = Tensor::matrix(rows, cols);
    for (std::size_t k = 0; k < rows * cols; ++k) {
      const auto text = read_field<std::string>(in, "feature value");
      u.features[k] = std::strtod(text.c_str(), nullptr);
    }
    data.push_back(std::move(u));
  }
  return data;
}

Tensor spec_augment(const Tensor& features, const SpecAugmentConfig& cfg, Rng& rng) {
  Tensor out = features;
  const std::size_t frames = features.rows();
  const std::size_t dims = features.cols();
  // Masks whose width is zero or whose axis is empty leave the copy alone.
  auto mask_span = [&rng](std::size_t param, std::size_t extent) -> std::pair<std::size_t, std::size_t> {
    const std::size_t width = std::min(uniform_count(0, param, rng), extent);
    const std::size_t start = uniform_count(0, extent - width, rng);
    return {start, width};
  };
  if (dims > 0) {
    for (std::size_t m = 0; m < cfg.num_freq_masks && cfg.freq_param > 0; ++m) {
      const auto [start, width] = mask_span(cfg.freq_param, dims);
      for (std::size_t r = 0; r < frames; ++r) {
        for (std::size_t f = start; f < start + width; ++f) out.at(r, f) = 0.0;
      }
    }
  }
  if (frames > 0) {
    for (std::size_t m = 0; m < cfg.num_time_masks && cfg.time_param > 0; ++m) {
      const auto [start, width] = mask_span(cfg.time_param, frames);
      for (std::size_t r = start; r < start + width; ++r) {
        for (std::size_t f = 0; f < dims; ++f) out.at(r, f) = 0.0;
      }
    }
  }
  return out;
}

}  // namespace mocha
