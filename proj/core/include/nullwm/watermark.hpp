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

// Deterministic derivation of a watermark (pattern, target label, extreme
// value) from an owner signature.

#pragma once

#include <cstdint>
#include <span>

#include "nullwm/filter.hpp"

namespace nullwm {

inline constexpr float kDefaultExtremeValue = 2000.0f;
inline constexpr int kDefaultBlockSize = 6;

struct WatermarkSpec {
  FilterPattern pattern;
  int target_label = 0;
  float extreme_value = kDefaultExtremeValue;

  friend bool operator==(const WatermarkSpec&, const WatermarkSpec&) = default;
};

struct TransformParams {
  int height = 28;
  int width = 28;
  int num_classes = 10;
  int block_size = kDefaultBlockSize;
  float extreme_value = kDefaultExtremeValue;
};

/// SHA256(tag || sig) read as a big-endian 256-bit integer, reduced mod
/// `modulus` (which must be non-zero). Tags 1..4 select h1..h4.
std::uint64_t hash_mod(std::uint8_t tag, std::span<const std::uint8_t> sig,
                       std::uint64_t modulus);

/// target = h1 mod Y, bits = h2 mod 2^(n^2),
/// pos = (h3 mod (H-n), h4 mod (W-n)).
/// When H == n (or W == n) the only admissible offset 0 is used.
/// Throws DimensionError if n > min(H, W), ValidationError for Y < 2,
/// n outside [1, 8] or a non-positive extreme value.
WatermarkSpec transform(std::span<const std::uint8_t> signature,
                        const TransformParams& params);

}  // namespace nullwm
