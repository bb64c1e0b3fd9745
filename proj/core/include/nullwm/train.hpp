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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nullwm/dataset.hpp"
#include "nullwm/model.hpp"
#include "nullwm/watermark.hpp"

namespace nullwm {

enum class Optimizer { kSgd, kMomentum, kAdam };

const char* to_string(Optimizer opt);
/// Throws ConfigError for unknown names.
Optimizer optimizer_from_string(const std::string& name);

struct TrainConfig {
  double learning_rate = 0.001;
  /// Per-update decay: lr_t = lr / (1 + decay * t).
  double decay = 0.0;
  Optimizer optimizer = Optimizer::kAdam;
  double momentum = 0.9;
  std::size_t batch_size = 128;
  int max_epochs = 30;
  double injection_ratio = 0.5;
  std::uint64_t seed = 0;
  /// Global gradient-norm clip; 0 disables.
  double clip_norm = 5.0;
  /// Layer names whose parameters are updated. Empty means every layer.
  std::vector<std::string> trainable_layers;
  /// Cap on evaluation samples per epoch; 0 uses the whole split.
  std::size_t eval_samples = 0;
  /// Stop once eval NC has not improved by more than min_delta for this many
  /// consecutive epochs. 0 always runs max_epochs. Needs an eval set.
  int patience = 0;
  double min_delta = 0.001;

  /// Throws ConfigError listing every invalid field.
  void validate() const;
};

/// Runs after each epoch, before the record is appended; may add metrics.
using EpochCallback = std::function<void(EpochRecord&, const ModelHandle&)>;

/// Trains `model` in place for up to config.max_epochs epochs on `train`.
///
/// Each mini-batch has config.injection_ratio of its samples replaced by
/// dual-embedding samples shared equally across `specs`. With no specs the
/// ratio is ignored and training is plain cross-entropy on clean data. After
/// every epoch the model is scored on `eval` (if non-empty) and a record is
/// appended to model.history(). With config.patience > 0 training stops early
/// when the eval NC plateaus. Throws TrainingError on a non-finite loss.
void train_in_place(ModelHandle& model, const LabeledImages& train,
                    const LabeledImages& eval, std::span<const WatermarkSpec> specs,
                    const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Copying form of train_in_place() that evaluates on dataset.test.
ModelHandle train_epochs(const ModelHandle& model, const Dataset& dataset,
                         std::span<const WatermarkSpec> specs,
                         const TrainConfig& config,
                         const EpochCallback& on_epoch = {});

}  // namespace nullwm
