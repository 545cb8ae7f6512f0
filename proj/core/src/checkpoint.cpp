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

#include "mocha/checkpoint.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace mocha {
namespace {

std::string next_line(std::istream& in, std::string_view what) {
  std::string line;
  if (!std::getline(in, line)) throw Error(fmt::format("checkpoint: missing {}", what));
  return line;
}

std::size_t parse_count(const std::string& line, std::string_view tag) {
  std::istringstream in(line);
  std::string word;
  std::size_t n = 0;
  if (!(in >> word >> n) || word != tag) {
    throw Error(fmt::format("checkpoint: expected '{} <count>', found '{}'", tag, line));
  }
  return n;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, Model& model, const KeyValues& metadata) {
  std::ostringstream out;
  out << kCheckpointVersion << '\n';
  const KeyValues config = model_config_dump(model.config);
  out << "config " << config.size() << '\n';
  for (const auto& [k, v] : config) out << k << '=' << v << '\n';
  out << "metadata " << metadata.size() << '\n';
  for (const auto& [k, v] : metadata) out << k << '=' << v << '\n';
  const auto params = model.parameters();
  out << "params " << params.size() << '\n';
  for (const NamedParam& p : params) {
    out << fmt::format("param {} {} {}\n", p.name, p.tensor->rows(), p.tensor->cols());
    out << fmt::format("{:a}\n", fmt::join(p.tensor->storage(), " "));
  }

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
    if (!file) throw Error(fmt::format("cannot write checkpoint {}", tmp.string()));
    file << out.str();
    file.flush();
    if (!file) throw Error(fmt::format("failed writing checkpoint {}", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open checkpoint {}", path.string()));
  const std::string version = next_line(in, "version");
  if (version != kCheckpointVersion) {
    throw Error(fmt::format("checkpoint: version '{}' does not match '{}'", version,
                            kCheckpointVersion));
  }
  ModelConfig config;
  const std::size_t n_config = parse_count(next_line(in, "config header"), "config");
  for (std::size_t i = 0; i < n_config; ++i) {
    const auto [k, v] = split_assignment(next_line(in, "config entry"));
    set_model_config(config, k, v);
  }
  config.validate();

  Checkpoint ckpt;
  const std::size_t n_meta = parse_count(next_line(in, "metadata header"), "metadata");
  for (std::size_t i = 0; i < n_meta; ++i) {
    ckpt.metadata.push_back(split_assignment(next_line(in, "metadata entry")));
  }

  Rng rng(0);
  ckpt.model = Model::random(config, rng);
  auto params = ckpt.model.parameters();
  const std::size_t n_params = parse_count(next_line(in, "params header"), "params");
  if (n_params != params.size()) {
    throw Error(fmt::format("checkpoint: {} parameters, model has {}", n_params, params.size()));
  }
  for (NamedParam& p : params) {
    std::istringstream head(next_line(in, "param header"));
    std::string tag, name;
    std::size_t rows = 0, cols = 0;
    if (!(head >> tag >> name >> rows >> cols) || tag != "param") {
      throw Error(fmt::format("checkpoint: malformed header for '{}'", p.name));
    }
    if (name != p.name) {
      throw Error(fmt::format("checkpoint: expected parameter '{}', found '{}'", p.name, name));
    }
    if (rows != p.tensor->rows() || cols != p.tensor->cols()) {
      throw Error(fmt::format("checkpoint: parameter '{}' has shape {}x{}, expected {}x{}", name,
                              rows, cols, p.tensor->rows(), p.tensor->cols()));
    }
    std::istringstream values(next_line(in, "param values"));
    std::string word;
    std::size_t k = 0;
    for (; values >> word; ++k) {
      if (k >= p.tensor->size()) {
        throw Error(fmt::format("checkpoint: parameter '{}' has too many values", name));
      }
      errno = 0;
      char* end = nullptr;
      const double v = std::strtod(word.c_str(), &end);
      if (errno != 0 || end != word.c_str() + word.size()) {
        throw Error(fmt::format("checkpoint: bad value '{}' in parameter '{}'", word, name));
      }
      (*p.tensor)[k] = v;
    }
    if (k != p.tensor->size()) {
      throw Error(fmt::format("checkpoint: parameter '{}' has the wrong number of values", name));
    }
  }
  return ckpt;
}

}  // namespace mocha
