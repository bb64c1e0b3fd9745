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


#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "nullwm/error.hpp"
#include "nullwm/filter.hpp"
#include "nullwm/rng.hpp"

namespace nullwm {
namespace {

FilterPattern random_pattern(Rng& rng, int h, int w) {
  const int n = 1 + static_cast<int>(rng.below(std::min({h, w, kMaxBlockSize})));
  const std::uint64_t bits = rng.next() & ((std::uint64_t{1} << (n * n)) - 1);
  const BlockPos pos{static_cast<int>(rng.below(h - n + 1)),
                     static_cast<int>(rng.below(w - n + 1))};
  return make_pattern(bits, pos, n, h, w);
}

std::vector<float> random_image(Rng& rng, const ImageShape& s) {
  std::vector<float> x(s.size());
  for (auto& v : x) v = static_cast<float>(rng.uniform());
  return x;
}

TEST(MakePatternTest, AllBlack) {
  const auto p = make_pattern(0, {0, 0}, 2, 4, 4);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) EXPECT_EQ(p.at(r, c), Cell::kBlack);
  }
  EXPECT_EQ(p.at(2, 2), Cell::kGray);
}

TEST(MakePatternTest, AllWhite) {
  const auto p = make_pattern((1u << 9) - 1, {1, 1}, 3, 5, 5);
  for (int r = 1; r < 4; ++r) {
    for (int c = 1; c < 4; ++c) EXPECT_EQ(p.at(r, c), Cell::kWhite);
  }
}

TEST(MakePatternTest, RowMajorMsbFirst) {
  const auto p = make_pattern(0b1001, {0, 0}, 2, 3, 3);
  EXPECT_EQ(p.at(0, 0), Cell::kWhite);
  EXPECT_EQ(p.at(0, 1), Cell::kBlack);
  EXPECT_EQ(p.at(1, 0), Cell::kBlack);
  EXPECT_EQ(p.at(1, 1), Cell::kWhite);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(p.at(2, i), Cell::kGray);
    EXPECT_EQ(p.at(i, 2), Cell::kGray);
  }
  EXPECT_EQ(p.bits(), 0b1001u);
  EXPECT_EQ(p.ascii(), "WB.\nBW.\n...\n");
}

TEST(MakePatternTest, ExactlyNSquaredNonGrayCells) {
  const auto p = make_pattern(0x5a, {2, 3}, 3, 10, 12);
  int non_gray = 0;
  for (auto c : p.cells()) non_gray += c != Cell::kGray;
  EXPECT_EQ(non_gray, 9);
}

TEST(MakePatternTest, RejectsOutOfRange) {
  EXPECT_THROW(make_pattern(16, {0, 0}, 2, 3, 3), ValidationError);
  EXPECT_THROW(make_pattern(0, {2, 0}, 2, 3, 3), ValidationError);
  EXPECT_THROW(make_pattern(0, {0, -1}, 2, 3, 3), ValidationError);
  EXPECT_THROW(make_pattern(0, {0, 0}, 0, 3, 3), ValidationError);
  EXPECT_THROW(make_pattern(0, {0, 0}, 9, 10, 10), ValidationError);
}

TEST(InvertTest, SwapsBlackAndWhite) {
  const auto black = make_pattern(0, {1, 1}, 2, 4, 4);
  const auto white = make_pattern(15, {1, 1}, 2, 4, 4);
  EXPECT_EQ(invert(black), white);
  EXPECT_EQ(invert(invert(black)), black);
  EXPECT_EQ(invert(black).block_pos(), black.block_pos());
  EXPECT_EQ(invert(black).block_size(), black.block_size());
}

TEST(ApplyTest, CellsOutsideBlockUnchanged) {
  const ImageShape s{3, 3, 1};
  const std::vector<float> x(9, 0.5f);
  const auto p = make_pattern(1, {0, 0}, 1, 3, 3);
  const auto y = apply(x, s, p, 2000.0f);
  EXPECT_FLOAT_EQ(y[0], 2000.0f);
  for (std::size_t i = 1; i < 9; ++i) EXPECT_FLOAT_EQ(y[i], 0.5f);
  EXPECT_FLOAT_EQ(x[0], 0.5f);
}

TEST(ApplyTest, BlackCellsGetNegativeLambda) {
  const ImageShape s{3, 3, 1};
  const std::vector<float> x(9, 0.25f);
  const auto y = apply(x, s, make_pattern(0, {1, 1}, 1, 3, 3), 7.0f);
  EXPECT_FLOAT_EQ(y[4], -7.0f);
}

TEST(ApplyTest, BroadcastsAcrossChannels) {
  const ImageShape s{2, 2, 3};
  const std::vector<float> x(s.size(), 0.1f);
  const auto y = apply(x, s, make_pattern(1, {1, 0}, 1, 2, 2), 5.0f);
  for (int c = 0; c < 3; ++c) {
    EXPECT_FLOAT_EQ(y[s.offset(1, 0, c)], 5.0f);
    EXPECT_FLOAT_EQ(y[s.offset(0, 0, c)], 0.1f);
  }
}

TEST(ApplyTest, Errors) {
  const ImageShape s{3, 3, 1};
  const std::vector<float> x(9, 0.0f);
  EXPECT_THROW(apply(x, s, make_pattern(0, {0, 0}, 1, 4, 4), 1.0f), DimensionError);
  EXPECT_THROW(apply(std::vector<float>(8), s, make_pattern(0, {0, 0}, 1, 3, 3), 1.0f),
               DimensionError);
  EXPECT_THROW(apply(x, s, make_pattern(0, {0, 0}, 1, 3, 3), 0.0f), ValidationError);
}

TEST(FilterPropertyTest, ThousandRandomCases) {
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const int h = 1 + static_cast<int>(rng.below(20));
    const int w = 1 + static_cast<int>(rng.below(20));
    const ImageShape s{h, w, 1 + static_cast<int>(rng.below(3))};
    const auto p = random_pattern(rng, h, w);
    const auto x = random_image(rng, s);
    const float lambda = static_cast<float>(rng.uniform(1.0, 3000.0));

    ASSERT_EQ(invert(invert(p)), p);
    const auto y = apply(x, s, p, lambda);
    ASSERT_EQ(y.size(), x.size());
    ASSERT_EQ(apply(y, s, p, lambda), y);
    const auto z = apply(x, s, invert(p), lambda);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        for (int ch = 0; ch < s.channels; ++ch) {
          const auto o = s.offset(r, c, ch);
          if (p.contains(r, c)) {
            ASSERT_NE(p.at(r, c), Cell::kGray);
            ASSERT_EQ(invert(p).at(r, c) == Cell::kGray, false);
            ASSERT_FLOAT_EQ(std::abs(y[o]), lambda);
            ASSERT_FLOAT_EQ(z[o], -y[o]);
          } else {
            ASSERT_EQ(p.at(r, c), Cell::kGray);
            ASSERT_EQ(y[o], x[o]);
            ASSERT_EQ(z[o], x[o]);
          }
        }
      }
    }
  }
}

TEST(PatternJsonTest, RoundTrip) {
  const auto p = make_pattern(0x7bd50a269ULL, {19, 12}, 6, 28, 28);
  const auto j = pattern_to_json(p);
  EXPECT_EQ(j.at("H").get<int>(), 28);
  EXPECT_EQ(j.at("n").get<int>(), 6);
  EXPECT_EQ(pattern_from_json(j), p);
}

}  // namespace
}  // namespace nullwm
