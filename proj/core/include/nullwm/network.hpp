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

// Feed-forward conv/pool/dense classifier with a softmax cross-entropy head.
//
// Tensors are NHWC, row-major. Conv kernels are stored as (k, k, C_in, C_out)
// and dense kernels as (D_in, D_out), which is the layout the GEMMs consume
// directly. The class is a template over the scalar type so the same code
// path can be checked in double precision against finite differences; models
// are trained and stored as float.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nullwm/model_spec.hpp"

namespace nullwm {

template <typename T>
class BasicNetwork {
 public:
  struct Param {
    std::string name;
    std::vector<int> shape;
    std::vector<T> values;
    /// Either empty or one 0/1 entry per value; masked entries stay zero
    /// through training.
    std::vector<T> mask;

    std::size_t size() const noexcept { return values.size(); }
  };

  BasicNetwork() = default;
  /// Validates the spec and allocates zero-filled parameters.
  explicit BasicNetwork(ModelSpec spec);

  /// Glorot-uniform kernels, zero biases, all masks cleared.
  void initialize(std::uint64_t seed);

  const ModelSpec& spec() const noexcept { return spec_; }
  const std::vector<LayerShapes>& shapes() const noexcept { return shapes_; }

  std::vector<Param>& params() noexcept { return params_; }
  const std::vector<Param>& params() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept;

  /// Index into params() of the kernel of `layer`; the bias follows it.
  /// Empty for pooling layers.
  std::optional<std::size_t> kernel_index(std::size_t layer) const;
  std::optional<std::size_t> layer_index(const std::string& name) const;

  /// Output probabilities, row-major (count x num_classes).
  std::vector<T> forward(std::span<const float> inputs, std::size_t count) const;

  /// Post-activation output of `layer` (NHWC, flattened per sample).
  std::vector<T> activations(std::span<const float> inputs, std::size_t count,
                             std::size_t layer) const;

  /// Mean softmax cross-entropy over the batch.
  T loss(std::span<const float> inputs, std::span<const int> labels) const;

  /// Mean loss; `grads` is resized to match params().
  T loss_and_gradient(std::span<const float> inputs, std::span<const int> labels,
                      std::vector<std::vector<T>>& grads) const;

  /// Zeroes every masked-out value.
  void apply_masks();

  /// Same weights, different scalar type.
  template <typename U>
  BasicNetwork<U> cast() const {
    BasicNetwork<U> out(spec_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& dst = out.params()[i];
      dst.values.assign(params_[i].values.begin(), params_[i].values.end());
      dst.mask.assign(params_[i].mask.begin(), params_[i].mask.end());
    }
    return out;
  }

  /// Copy whose output layer has `num_classes` freshly initialised units.
  BasicNetwork with_new_head(int num_classes, std::uint64_t seed) const;

 private:
  struct Tape;
  void run(std::span<const float> inputs, std::size_t count, std::size_t upto,
           std::vector<T>& out, Tape* tape) const;

  ModelSpec spec_;
  std::vector<LayerShapes> shapes_;
  std::vector<Param> params_;
  std::vector<std::optional<std::size_t>> kernel_of_layer_;
};

using Network = BasicNetwork<float>;

extern template class BasicNetwork<float>;
extern template class BasicNetwork<double>;

}  // namespace nullwm
