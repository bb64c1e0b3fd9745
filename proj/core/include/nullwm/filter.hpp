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

// Ternary filter patterns and the input filter x (+) [p, lambda].

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nullwm/image.hpp"

namespace nullwm {

/// Cell values use the -1 / 0 / 1 encoding so dumps stay readable.
enum class Cell : std::int8_t { kGray = -1, kBlack = 0, kWhite = 1 };

struct BlockPos {
  int row = 0;
  int col = 0;
  friend bool operator==(const BlockPos&, const BlockPos&) = default;
};

/// An H x W grid that is GRAY everywhere except one n x n block of
/// BLACK/WHITE cells at `block_pos`.
class FilterPattern {
 public:
  FilterPattern() = default;

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int block_size() const noexcept { return block_size_; }
  BlockPos block_pos() const noexcept { return block_pos_; }

  Cell at(int row, int col) const {
    return cells_[static_cast<std::size_t>(row) * width_ + col];
  }
  std::span<const Cell> cells() const noexcept { return cells_; }

  /// Block contents read back as an integer, row-major, MSB first.
  std::uint64_t bits() const;

  bool contains(int row, int col) const noexcept {
    return row >= block_pos_.row && row < block_pos_.row + block_size_ &&
           col >= block_pos_.col && col < block_pos_.col + block_size_;
  }

  /// '.' gray, 'B' black, 'W' white; one line per row.
  std::string ascii() const;

  friend bool operator==(const FilterPattern&, const FilterPattern&) = default;

 private:
  friend FilterPattern make_pattern(std::uint64_t, BlockPos, int, int, int);
  friend FilterPattern invert(const FilterPattern&);

  int height_ = 0;
  int width_ = 0;
  int block_size_ = 0;
  BlockPos block_pos_;
  std::vector<Cell> cells_;
};

/// Largest block whose bit pattern fits in 64 bits.
inline constexpr int kMaxBlockSize = 8;

/// Cell (pos.row + i, pos.col + j) is WHITE iff bit (i*n + j) of `bits`,
/// counted from the most significant of the n*n bits, is set.
/// Throws ValidationError for out-of-range bits/pos or n.
FilterPattern make_pattern(std::uint64_t bits, BlockPos pos, int n, int height,
                           int width);

/// Swaps WHITE and BLACK; GRAY cells and the block location are untouched.
FilterPattern invert(const FilterPattern& p);

/// Returns a copy of `x` (one HWC sample) where WHITE cells become +lambda and
/// BLACK cells -lambda in every channel. Throws DimensionError if the
/// pattern does not match `shape`, ValidationError if lambda <= 0.
std::vector<float> apply(std::span<const float> x, const ImageShape& shape,
                         const FilterPattern& p, float lambda);

/// In-place variant over `out` (already holding the source sample).
void apply_inplace(std::span<float> x, const ImageShape& shape,
                   const FilterPattern& p, float lambda);

/// {H, W, n, pos: [row, col], bits_hex}
nlohmann::json pattern_to_json(const FilterPattern& p);
FilterPattern pattern_from_json(const nlohmann::json& j);

}  // namespace nullwm
