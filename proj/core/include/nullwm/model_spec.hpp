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

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nullwm/image.hpp"

namespace nullwm {

enum class LayerKind { kConv, kMaxPool, kDense };
enum class Activation { kNone, kRelu, kSoftmax };

/// One stage of a feed-forward chain. Convolutions use stride 1 and valid
/// padding; pooling uses non-overlapping windows.
struct LayerSpec {
  LayerKind kind = LayerKind::kDense;
  std::string name;
  /// Output channels (conv) or units (dense). Unused for pooling.
  int units = 0;
  /// Filter size (conv) or pooling window.
  int kernel = 0;
  Activation activation = Activation::kNone;

  bool has_weights() const noexcept { return kind != LayerKind::kMaxPool; }

  static LayerSpec conv(std::string name, int channels, int kernel,
                        Activation act = Activation::kRelu) {
    return {LayerKind::kConv, std::move(name), channels, kernel, act};
  }
  static LayerSpec max_pool(std::string name, int window) {
    return {LayerKind::kMaxPool, std::move(name), 0, window, Activation::kNone};
  }
  static LayerSpec dense(std::string name, int units,
                         Activation act = Activation::kRelu) {
    return {LayerKind::kDense, std::move(name), units, 0, act};
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Shape flowing out of a layer. Dense outputs are {1, 1, units}.
struct LayerShapes {
  ImageShape input;
  ImageShape output;
};

struct ModelSpec {
  ImageShape input;
  int num_classes = 0;
  std::vector<LayerSpec> layers;

  /// Throws SpecError unless the chain is valid: positive sizes, unique
  /// names, no conv/pool after a dense layer, kernels that fit, and a final
  /// softmax dense layer with num_classes units.
  void validate() const;

  /// Per-layer input/output shapes. Calls validate().
  std::vector<LayerShapes> shapes() const;

  std::size_t parameter_count() const;

  /// 2 Conv(32,64; 5x5; ReLU) + 2 MaxPool(2) + Dense(512, ReLU) + softmax.
  static ModelSpec mnist(int num_classes = 10, ImageShape input = {28, 28, 1});
  /// Reduced-width variant of mnist() for fast tests.
  static ModelSpec small(int num_classes = 10, ImageShape input = {28, 28, 1});
  /// Named architecture: "mnist" or "small". Throws SpecError otherwise.
  static ModelSpec by_name(const std::string& arch, int num_classes,
                           ImageShape input);

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

nlohmann::json spec_to_json(const ModelSpec& spec);
/// Throws SpecError on malformed descriptors.
ModelSpec spec_from_json(const nlohmann::json& j);

const char* to_string(LayerKind kind);
const char* to_string(Activation act);

}  // namespace nullwm
