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


// Trained classifier plus its training history.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nullwm/dataset.hpp"
#include "nullwm/network.hpp"

namespace nullwm {

/// Anything that maps images to labels. Verification and evaluation only need
/// this much, which keeps test stubs trivial.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual ImageShape input_shape() const = 0;
  virtual int num_classes() const = 0;
  /// Argmax labels, ties resolved to the lowest class index.
  virtual std::vector<int> predict(std::span<const float> inputs,
                                   std::size_t count) const = 0;

  std::vector<int> predict(const LabeledImages& data) const {
    return predict(data.inputs, data.size());
  }
};

struct EpochRecord {
  int epoch = 0;
  /// Accuracy on the evaluation split after this epoch.
  double nc = 0.0;
  double loss = 0.0;
  /// Cumulative optimizer-loop seconds, evaluation excluded.
  double seconds = 0.0;
  /// Learning rate used by the last update of the epoch.
  double learning_rate = 0.0;
  /// Updates whose gradient norm was clipped.
  std::size_t clipped_steps = 0;
  std::map<std::string, double> metrics;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  /// Updates applied over the model's lifetime; drives the lr schedule.
  std::uint64_t steps = 0;
  /// Learning rate of the most recent update, 0 if never trained.
  double last_learning_rate = 0.0;
};

class ModelHandle : public Classifier {
 public:
  ModelHandle() = default;
  explicit ModelHandle(Network network) : network_(std::move(network)) {}

  const ModelSpec& spec() const noexcept { return network_.spec(); }
  Network& network() noexcept { return network_; }
  const Network& network() const noexcept { return network_; }
  TrainingHistory& history() noexcept { return history_; }
  const TrainingHistory& history() const noexcept { return history_; }

  ImageShape input_shape() const override { return network_.spec().input; }
  int num_classes() const override { return network_.spec().num_classes; }
  using Classifier::predict;
  std::vector<int> predict(std::span<const float> inputs,
                           std::size_t count) const override;

  /// Row-major (count x num_classes) probabilities.
  std::vector<float> predict_proba(std::span<const float> inputs,
                                   std::size_t count) const;

  /// SHA256 over parameter names, shapes, values and masks, hex.
  std::string weights_digest() const;

 private:
  Network network_;
  TrainingHistory history_;
};

/// Seeded Glorot initialisation. Throws SpecError on an invalid chain.
ModelHandle build_model(const ModelSpec& spec, std::uint64_t seed);

std::vector<int> argmax_rows(std::span<const float> values, std::size_t cols);

/// Fraction of samples whose predicted label equals the true label.
double evaluate_nc(const Classifier& model, const LabeledImages& data);

}  // namespace nullwm
