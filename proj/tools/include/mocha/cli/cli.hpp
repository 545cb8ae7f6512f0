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

// Command-line front end: argument parsing and verb dispatch.

#ifndef MOCHA_CLI_CLI_HPP_
#define MOCHA_CLI_CLI_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mocha/config.hpp"
#include "mocha/model.hpp"
#include "mocha/tensor.hpp"

namespace mocha::cli {

enum class Verb { kTrain, kDecode, kAlign, kReport, kSelftest };

enum ExitCode : int { kSuccess = 0, kUsage = 1, kRuntime = 2, kSelftestFailed = 3 };

class UsageError : public Error {
 public:
  using Error::Error;
};

// Carries the rendered help text; not a failure.
class HelpRequested : public std::exception {
 public:
  explicit HelpRequested(std::string text) : text_(std::move(text)) {}
  const char* what() const noexcept override { return text_.c_str(); }

 private:
  std::string text_;
};

struct Command {
  Verb verb = Verb::kSelftest;
  std::optional<std::uint64_t> seed;

  // train
  std::string config;
  std::string seed_checkpoint;
  KeyValues overrides;

  // decode / align
  std::string checkpoint;
  std::string data;
  std::size_t beam = 10;
  std::optional<std::string> encoder;
  std::optional<std::size_t> chunk_nc;
  std::optional<std::size_t> chunk_nr;

  // report
  std::string results;
  std::string buckets;

  std::string out;
  std::string filter;
};

// `args` excludes the program name. Throws UsageError or HelpRequested.
Command parse_args(const std::vector<std::string>& args);

// Runs one command, writing human-readable progress to `out`. Returns an
// ExitCode; runtime failures propagate as exceptions.
int run(const Command& command, std::ostream& out);

// parse_args + run with every failure mapped to its exit code.
int main_entry(int argc, const char* const* argv);

// Encoder recorded in checkpoint metadata, overridable from the command.
EncoderMode resolve_encoder(const KeyValues& metadata, const Command& command);

// "3,6,9" -> {3, 6, 9}; empty -> empty.
std::vector<std::size_t> parse_edges(std::string_view text);

}  // namespace mocha::cli

#endif  // MOCHA_CLI_CLI_HPP_
