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

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nullwm/crypto.hpp"
#include "nullwm/dataset.hpp"
#include "nullwm/model.hpp"
#include "nullwm/watermark.hpp"

namespace nullwm {

inline constexpr double kDefaultThreshold = 0.8;
inline constexpr std::size_t kDefaultVerifySamples = 1000;

/// Indices of a seeded sample without replacement, in ascending order. A
/// missing or oversized sample_size selects every index.
std::vector<std::size_t> sample_indices(std::size_t n,
                                        std::optional<std::size_t> sample_size,
                                        std::uint64_t seed);

struct PhiScores {
  double phi_true = 0.0;
  double phi_null = 0.0;
  /// Accuracy on the same clean samples.
  double nc = 0.0;
  std::size_t num_samples = 0;

  double wm() const noexcept { return std::min(phi_true, phi_null); }
};

/// phi_true and phi_null over one shared sample. phi_true counts filtered
/// (inverted pattern) inputs classified as the target label; phi_null counts
/// samples where both the clean and the null-filtered input are classified as
/// the true label. Throws ValidationError on an empty set.
PhiScores measure_phi(const Classifier& model, const WatermarkSpec& spec,
                      const LabeledImages& data,
                      std::optional<std::size_t> sample_size = std::nullopt,
                      std::uint64_t seed = 0);

double phi_true(const Classifier& model, const WatermarkSpec& spec,
                const LabeledImages& data,
                std::optional<std::size_t> sample_size = std::nullopt,
                std::uint64_t seed = 0);

double phi_null(const Classifier& model, const WatermarkSpec& spec,
                const LabeledImages& data,
                std::optional<std::size_t> sample_size = std::nullopt,
                std::uint64_t seed = 0);

struct VerifyOptions {
  double threshold = kDefaultThreshold;
  /// nullopt verifies on the whole set.
  std::optional<std::size_t> sample_size = kDefaultVerifySamples;
  std::uint64_t seed = 0;
  int block_size = kDefaultBlockSize;
  float extreme_value = kDefaultExtremeValue;
};

struct VerificationReport {
  bool signature_valid = false;
  double phi_true = 0.0;
  double phi_null = 0.0;
  double wm = 0.0;
  double threshold = kDefaultThreshold;
  bool pass = false;
  std::size_t num_samples = 0;
  double runtime_seconds = 0.0;
  std::string owner_id;
  std::string key_id;

  std::string summary() const;
};

nlohmann::json report_to_json(const VerificationReport& report);

/// Signature check, watermark derivation, then phi measurement. Never
/// throws for verification failures; they are recorded in the report.
VerificationReport verify_watermark(const Classifier& model,
                                    const OwnershipCredential& credential,
                                    const LabeledImages& data,
                                    const VerifyOptions& options = {});

/// Same, with the spec already derived (skips the signature step).
VerificationReport verify_spec(const Classifier& model, const WatermarkSpec& spec,
                               const LabeledImages& data,
                               const VerifyOptions& options = {});

WatermarkSpec derive_spec(const OwnershipCredential& credential,
                          const Classifier& model, int block_size = kDefaultBlockSize,
                          float extreme_value = kDefaultExtremeValue);

struct OwnershipTestResult {
  std::size_t num_watermarks = 0;
  std::size_t passes = 0;
  double false_positive_rate = 0.0;
  /// Mean phi_true over the random watermarks: the chance that a single
  /// filtered image lands on a random target label.
  double mean_match_rate = 0.0;
  double max_wm = 0.0;
  /// Set when a control credential was supplied.
  std::optional<bool> control_pass;
};

/// Verifies `num_watermarks` freshly generated credentials (seeded keys)
/// against `model` and reports the pass fraction. Clean predictions are
/// computed once and shared across credentials.
OwnershipTestResult non_trivial_ownership_test(
    const Classifier& model, std::size_t num_watermarks, const LabeledImages& data,
    const VerifyOptions& options = {},
    const std::optional<OwnershipCredential>& control = std::nullopt);

}  // namespace nullwm
