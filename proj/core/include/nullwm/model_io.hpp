// Copyright 2026 The nullwm Authors
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


// Model file layout (all integers little-endian):
//
//   8 bytes   magic "NWMMODEL"
//   u32       format version
//   u32       header length in bytes
//   header    UTF-8 JSON: {"spec", "history", "blobs": [{name, shape, offset, count}]}
//   data      float32 blobs; offsets are relative to the start of this section
//
// Masks are stored as extra blobs named "<param>.mask".

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nullwm/model.hpp"

namespace nullwm {

inline constexpr char kModelMagic[8] = {'N', 'W', 'M', 'M', 'O', 'D', 'E', 'L'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize_model(const ModelHandle& model);
/// Throws FormatError (or UnsupportedVersionError) on bad input.
ModelHandle deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const ModelHandle& model, const std::filesystem::path& path);
ModelHandle load_model(const std::filesystem::path& path);

nlohmann::json history_to_json(const TrainingHistory& history);
TrainingHistory history_from_json(const nlohmann::json& j);

}  // namespace nullwm
