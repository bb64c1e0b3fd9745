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

#include "nullwm/filter.hpp"

#include <charconv>

#include <nlohmann/json.hpp>

#include "nullwm/error.hpp"

namespace nullwm {

std::uint64_t FilterPattern::bits() const {
  std::uint64_t out = 0;
  for (int i = 0; i < block_size_; ++i) {
    for (int j = 0; j < block_size_; ++j) {
      out = (out << 1) |
            (at(block_pos_.row + i, block_pos_.col + j) == Cell::kWhite ? 1u : 0u);
    }
  }
  return out;
}

std::string FilterPattern::ascii() const {
  std::string out;
  out.reserve(static_cast<std::size_t>(height_) * (width_ + 1));
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      switch (at(r, c)) {
        case Cell::kGray: out.push_back('.'); break;
        case Cell::kBlack: out.push_back('B'); break;
        case Cell::kWhite: out.push_back('W'); break;
      }
    }
    out.push_back('\n');
  }
  return out;
}

FilterPattern make_pattern(std::uint64_t bits, BlockPos pos, int n, int height,
                           int width) {
  if (n < 1 || n > kMaxBlockSize) {
    throw ValidationError("block size must be in [1, " +
                          std::to_string(kMaxBlockSize) + "]");
  }
  if (height < n || width < n) {
    throw ValidationError("block does not fit in a " + std::to_string(height) +
                          "x" + std::to_string(width) + " grid");
  }
  const int nbits = n * n;
  if (nbits < 64 && bits >> nbits != 0) {
    throw ValidationError("bits exceed 2^(n*n)");
  }
  if (pos.row < 0 || pos.col < 0 || pos.row + n > height || pos.col + n > width) {
    throw ValidationError("block position out of bounds");
  }
  FilterPattern p;
  p.height_ = height;
  p.width_ = width;
  p.block_size_ = n;
  p.block_pos_ = pos;
  p.cells_.assign(static_cast<std::size_t>(height) * width, Cell::kGray);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int shift = nbits - 1 - (i * n + j);
      const bool white = (bits >> shift) & 1u;
      p.cells_[static_cast<std::size_t>(pos.row + i) * width + pos.col + j] =
          white ? Cell::kWhite : Cell::kBlack;
    }
  }
  return p;
}

FilterPattern invert(const FilterPattern& p) {
  FilterPattern out = p;
  for (auto& c : out.cells_) {
    if (c == Cell::kWhite) {
      c = Cell::kBlack;
    } else if (c == Cell::kBlack) {
      c = Cell::kWhite;
    }
  }
  return out;
}

void apply_inplace(std::span<float> x, const ImageShape& shape,
                   const FilterPattern& p, float lambda) {
  if (shape.height != p.height() || shape.width != p.width()) {
    throw DimensionError("pattern is " + std::to_string(p.height()) + "x" +
                         std::to_string(p.width()) + " but input is " +
                         shape.to_string());
  }
  if (x.size() != shape.size()) {
    throw DimensionError("input has " + std::to_string(x.size()) +
                         " values, expected " + std::to_string(shape.size()));
  }
  if (!(lambda > 0.0f)) throw ValidationError("extreme value must be > 0");
  const auto [r0, c0] = p.block_pos();
  const int n = p.block_size();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const float v = p.at(r0 + i, c0 + j) == Cell::kWhite ? lambda : -lambda;
      const std::size_t base = shape.offset(r0 + i, c0 + j);
      for (int ch = 0; ch < shape.channels; ++ch) x[base + ch] = v;
    }
  }
}

std::vector<float> apply(std::span<const float> x, const ImageShape& shape,
                         const FilterPattern& p, float lambda) {
  std::vector<float> out(x.begin(), x.end());
  apply_inplace(out, shape, p, lambda);
  return out;
}

nlohmann::json pattern_to_json(const FilterPattern& p) {
  char buf[17];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), p.bits(), 16);
  (void)ec;
  return nlohmann::json{
      {"H", p.height()},
      {"W", p.width()},
      {"n", p.block_size()},
      {"pos", {p.block_pos().row, p.block_pos().col}},
      {"bits_hex", std::string(buf, end)},
  };
}

FilterPattern pattern_from_json(const nlohmann::json& j) {
  try {
    const std::string hex = j.at("bits_hex").get<std::string>();
    std::uint64_t bits = 0;
    auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), bits, 16);
    if (ec != std::errc() || ptr != hex.data() + hex.size()) {
      throw FormatError("pattern: bad bits_hex '" + hex + "'");
    }
    const auto& pos = j.at("pos");
    return make_pattern(bits, {pos.at(0).get<int>(), pos.at(1).get<int>()},
                        j.at("n").get<int>(), j.at("H").get<int>(),
                        j.at("W").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("pattern: ") + e.what());
  }
}

}  // namespace nullwm
