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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nullwm/image.hpp"

namespace nullwm {

/// Images (HWC, float in [0,1]) with integer labels.
struct LabeledImages {
  ImageShape shape;
  std::vector<float> inputs;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }

  std::span<const float> image(std::size_t i) const {
    return {inputs.data() + i * shape.size(), shape.size()};
  }
  std::span<float> image(std::size_t i) {
    return {inputs.data() + i * shape.size(), shape.size()};
  }

  void reserve(std::size_t n) {
    inputs.reserve(n * shape.size());
    labels.reserve(n);
  }
  void push_back(std::span<const float> x, int label) {
    inputs.insert(inputs.end(), x.begin(), x.end());
    labels.push_back(label);
  }
  void append(const LabeledImages& other) {
    inputs.insert(inputs.end(), other.inputs.begin(), other.inputs.end());
    labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  }

  /// Copy of the selected rows, in the given order.
  LabeledImages select(std::span<const std::size_t> indices) const;
};

struct Dataset {
  std::string name;
  int num_classes = 0;
  LabeledImages train;
  LabeledImages test;

  const ImageShape& shape() const noexcept { return train.shape; }
};

struct LoadOptions {
  /// Cap on the number of training samples (seeded uniform subset).
  std::optional<std::size_t> limit;
  /// Cap on the number of test samples.
  std::optional<std::size_t> test_limit;
  std::uint64_t seed = 0;
  /// Overrides the dataset cache directory (see default_data_dir()).
  std::optional<std::filesystem::path> data_dir;
};

inline constexpr const char* kDataDirEnv = "NULLWM_DATA_DIR";

/// $NULLWM_DATA_DIR, else $XDG_CACHE_HOME/nullwm, else ~/.cache/nullwm.
std::filesystem::path default_data_dir();

/// "mnist" reads the four IDX files from <data_dir>/mnist.
/// "synthetic" is a 10-class 28x28x1 stroke-pattern task generated from the
/// seed (4000 train / 1000 test); "synthetic5" is a 5-class variant drawn from
/// a different prototype family, used as a transfer-learning student task.
/// Throws IngestionError for missing files, ValidationError for unknown names.
Dataset load_dataset(const std::string& name, const LoadOptions& options = {});

/// Parses one IDX file (magic 0x0801 labels or 0x0803 images).
/// Images are scaled to [0,1].
LabeledImages read_idx(const std::filesystem::path& images,
                       const std::filesystem::path& labels);

struct SyntheticOptions {
  int num_classes = 10;
  std::size_t train_size = 4000;
  std::size_t test_size = 1000;
  /// Selects the family of class prototypes.
  std::uint64_t family = 0;
  /// Drives per-sample jitter and noise.
  std::uint64_t seed = 0;
};

Dataset make_synthetic(const SyntheticOptions& options);

/// Seeded uniform subset of `n` samples (without replacement).
LabeledImages subsample(const LabeledImages& data, std::size_t n,
                        std::uint64_t seed);

}  // namespace nullwm
