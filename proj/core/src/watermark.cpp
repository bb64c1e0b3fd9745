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

#include "nullwm/watermark.hpp"

#include <algorithm>
#include <string>

#include "nullwm/crypto.hpp"
#include "nullwm/error.hpp"

namespace nullwm {

namespace {

Digest tagged_digest(std::uint8_t tag, std::span<const std::uint8_t> sig) {
  Bytes msg;
  msg.reserve(sig.size() + 1);
  msg.push_back(tag);
  msg.insert(msg.end(), sig.begin(), sig.end());
  return sha256(msg);
}

// Low `nbits` bits of the big-endian digest, i.e. digest mod 2^nbits.
std::uint64_t low_bits(const Digest& d, int nbits) {
  std::uint64_t v = 0;
  for (std::size_t i = d.size() - 8; i < d.size(); ++i) v = (v << 8) | d[i];
  return nbits >= 64 ? v : v & ((std::uint64_t{1} << nbits) - 1);
}

}  // namespace

std::uint64_t hash_mod(std::uint8_t tag, std::span<const std::uint8_t> sig,
                       std::uint64_t modulus) {
  if (modulus == 0) throw ValidationError("hash_mod: zero modulus");
  const Digest d = tagged_digest(tag, sig);
  // Horner over the big-endian digest with overflow-free modular steps.
  auto add_mod = [modulus](std::uint64_t a, std::uint64_t b) {
    return a >= modulus - b ? a - (modulus - b) : a + b;
  };
  std::uint64_t r = 0;
  for (auto byte : d) {
    for (int i = 0; i < 8; ++i) r = add_mod(r, r);
    r = add_mod(r, byte % modulus);
  }
  return r;
}

WatermarkSpec transform(std::span<const std::uint8_t> signature,
                        const TransformParams& params) {
  const int n = params.block_size;
  if (n < 1 || n > kMaxBlockSize) {
    throw ValidationError("block size must be in [1, " +
                          std::to_string(kMaxBlockSize) + "]");
  }
  if (n > std::min(params.height, params.width)) {
    throw DimensionError("block size " + std::to_string(n) +
                         " exceeds input " + std::to_string(params.height) +
                         "x" + std::to_string(params.width));
  }
  if (params.num_classes < 2) throw ValidationError("need at least 2 classes");
  if (!(params.extreme_value > 0.0f)) {
    throw ValidationError("extreme value must be > 0");
  }

  WatermarkSpec spec;
  spec.target_label = static_cast<int>(
      hash_mod(1, signature, static_cast<std::uint64_t>(params.num_classes)));
  const std::uint64_t bits = low_bits(tagged_digest(2, signature), n * n);
  const auto offset = [&](std::uint8_t tag, int extent) {
    const int range = extent - n;
    return range == 0 ? 0
                      : static_cast<int>(hash_mod(
                            tag, signature, static_cast<std::uint64_t>(range)));
  };
  const BlockPos pos{offset(3, params.height), offset(4, params.width)};
  spec.pattern = make_pattern(bits, pos, n, params.height, params.width);
  spec.extreme_value = params.extreme_value;
  return spec;
}

}  // namespace nullwm
