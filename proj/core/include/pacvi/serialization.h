// Copyright 2026 The pacvi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PACVI_SERIALIZATION_H_
#define PACVI_SERIALIZATION_H_

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "pacvi/envs.h"
#include "pacvi/objective.h"
#include "pacvi/pac_bound.h"
#include "pacvi/variational_net.h"

namespace pacvi {

using Json = nlohmann::ordered_json;

inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr const char* kVersionString = "pacvi 0.1.0";

Json to_json(const NetworkArch& arch);
NetworkArch arch_from_json(const Json& j);

Json to_json(const Hyperparams& h);
Hyperparams hyperparams_from_json(const Json& j);

Json to_json(const EnvSpec& spec);

Json to_json(const BoundReport& report);

struct Checkpoint {
  VariationalParams params;
  Hyperparams hyperparams;
  Json config;  // resolved run configuration, may be null
};

Json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const Json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Writes text atomically enough for our purposes; throws InputError when the
// destination cannot be written.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// Pretty JSON with a trailing newline.
std::string dump_json(const Json& j);

}  // namespace pacvi

#endif  // PACVI_SERIALIZATION_H_
