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

// Text checkpoints: a version line, the model configuration, free-form
// key=value metadata, then every parameter with its shape and hex-float
// values. Writes go to a temporary file that is renamed into place.

#ifndef MOCHA_CHECKPOINT_HPP_
#define MOCHA_CHECKPOINT_HPP_

#include <filesystem>

#include "mocha/config.hpp"
#include "mocha/model.hpp"

namespace mocha {

inline constexpr const char* kCheckpointVersion = "mocha-checkpoint v1";

struct Checkpoint {
  Model model;
  KeyValues metadata;
};

void save_checkpoint(const std::filesystem::path& path, Model& model,
                     const KeyValues& metadata = {});
// Throws Error naming the offending field on any mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mocha

#endif  // MOCHA_CHECKPOINT_HPP_
