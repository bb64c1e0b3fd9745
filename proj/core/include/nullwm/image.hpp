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

#pragma once

#include <cstddef>
#include <string>

namespace nullwm {

/// Spatial layout of one input sample. Pixels are stored row-major with
/// channels innermost (HWC).
struct ImageShape {
  int height = 0;
  int width = 0;
  int channels = 1;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(height) * width * channels;
  }
  std::size_t offset(int row, int col, int channel = 0) const noexcept {
    return (static_cast<std::size_t>(row) * width + col) * channels + channel;
  }
  std::string to_string() const {
    return std::to_string(height) + "x" + std::to_string(width) + "x" +
           std::to_string(channels);
  }

  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

}  // namespace nullwm
