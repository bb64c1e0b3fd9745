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
#include <span>
#include <vector>

#include "nullwm/dataset.hpp"
#include "nullwm/watermark.hpp"

namespace nullwm {

/// A training batch in which a fraction of samples has been replaced by
/// dual-embedding samples.
///
/// `true_embedded` holds x (+) [inv(p), lambda] relabelled to the target
/// label; `null_embedded` holds x (+) [p, lambda] with the original label.
/// The `*_source` vectors give the index of each sample in the source batch
/// and `*_spec` the watermark it was built from.
struct WatermarkBatch {
  LabeledImages clean;
  LabeledImages true_embedded;
  LabeledImages null_embedded;
  std::vector<std::size_t> clean_source;
  std::vector<std::size_t> true_source;
  std::vector<std::size_t> null_source;
  std::vector<std::size_t> true_spec;
  std::vector<std::size_t> null_spec;
  double injection_ratio = 0.0;

  std::size_t watermark_count() const noexcept {
    return true_embedded.size() + null_embedded.size();
  }
  /// clean, then true, then null samples.
  LabeledImages merged() const;
};

/// Selects ceil(ratio * B) distinct samples (seeded), splits them as evenly as
/// possible across `specs`, and within each spec half go to true embedding
/// (rounded up) and half to null embedding. Unselected samples stay clean.
/// An empty spec list yields an unchanged batch. Throws ValidationError if the
/// ratio is outside [0, 1).
WatermarkBatch make_wm_batch(const LabeledImages& batch,
                             std::span<const WatermarkSpec> specs,
                             double injection_ratio, std::uint64_t seed);

inline WatermarkBatch make_wm_batch(const LabeledImages& batch,
                                    const WatermarkSpec& spec,
                                    double injection_ratio, std::uint64_t seed) {
  return make_wm_batch(batch, std::span<const WatermarkSpec>(&spec, 1),
                       injection_ratio, seed);
}

}  // namespace nullwm
