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

#include "nullwm/wm_batch.hpp"

#include <cmath>

#include "nullwm/error.hpp"
#include "nullwm/rng.hpp"

namespace nullwm {

LabeledImages WatermarkBatch::merged() const {
  LabeledImages out;
  out.shape = clean.shape;
  out.reserve(clean.size() + watermark_count());
  out.append(clean);
  out.append(true_embedded);
  out.append(null_embedded);
  return out;
}

WatermarkBatch make_wm_batch(const LabeledImages& batch,
                             std::span<const WatermarkSpec> specs,
                             double injection_ratio, std::uint64_t seed) {
  if (!(injection_ratio >= 0.0 && injection_ratio < 1.0)) {
    throw ValidationError("injection ratio must be in [0, 1)");
  }
  const std::size_t b = batch.size();
  WatermarkBatch out;
  out.injection_ratio = injection_ratio;
  out.clean.shape = out.true_embedded.shape = out.null_embedded.shape = batch.shape;

  std::size_t selected = 0;
  if (!specs.empty()) {
    // Guard against 0.5 * 128 = 64.000000001 style rounding.
    selected = static_cast<std::size_t>(
        std::ceil(injection_ratio * static_cast<double>(b) - 1e-9));
  }
  Rng rng(seed);
  const auto picks = rng.sample_without_replacement(b, selected);

  std::vector<char> taken(b, 0);
  std::size_t cursor = 0;
  const std::size_t k = specs.size();
  for (std::size_t s = 0; s < k; ++s) {
    const std::size_t share = selected / k + (s < selected % k ? 1 : 0);
    const std::size_t n_true = (share + 1) / 2;
    const auto& spec = specs[s];
    const FilterPattern inverted = invert(spec.pattern);
    for (std::size_t j = 0; j < share; ++j, ++cursor) {
      const std::size_t src = picks[cursor];
      taken[src] = 1;
      std::vector<float> x(batch.image(src).begin(), batch.image(src).end());
      if (j < n_true) {
        apply_inplace(x, batch.shape, inverted, spec.extreme_value);
        out.true_embedded.push_back(x, spec.target_label);
        out.true_source.push_back(src);
        out.true_spec.push_back(s);
      } else {
        apply_inplace(x, batch.shape, spec.pattern, spec.extreme_value);
        out.null_embedded.push_back(x, batch.labels[src]);
        out.null_source.push_back(src);
        out.null_spec.push_back(s);
      }
    }
  }
  out.clean.reserve(b - selected);
  for (std::size_t i = 0; i < b; ++i) {
    if (!taken[i]) {
      out.clean.push_back(batch.image(i), batch.labels[i]);
      out.clean_source.push_back(i);
    }
  }
  return out;
}

}  // namespace nullwm
