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


// Owner-side workflow: sign, derive the watermark, train with dual embedding.

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nullwm/crypto.hpp"
#include "nullwm/dataset.hpp"
#include "nullwm/model.hpp"
#include "nullwm/train.hpp"
#include "nullwm/watermark.hpp"

namespace nullwm {

struct WatermarkParams {
  int block_size = kDefaultBlockSize;
  float extreme_value = kDefaultExtremeValue;
};

struct CredentialInputs {
  OwnerKeys keys;
  std::string owner_id;
  /// Empty means the current UTC time.
  std::string timestamp;
};

struct EmbedResult {
  ModelHandle model;
  OwnershipCredential credential;
  WatermarkSpec spec;
};

/// Seed used for weight initialisation under a training seed.
std::uint64_t init_seed(std::uint64_t training_seed);

/// sign -> transform -> train from a fresh seeded initialisation.
EmbedResult embed_watermark(const Dataset& dataset, const ModelSpec& model_spec,
                            const CredentialInputs& inputs, const TrainConfig& config,
                            const WatermarkParams& params = {},
                            const EpochCallback& on_epoch = {});

struct MultiEmbedResult {
  ModelHandle model;
  std::vector<WatermarkSpec> specs;
};

/// Trains every credential's watermark jointly from scratch; the injection
/// ratio is shared equally. Throws ValidationError for an empty list.
MultiEmbedResult embed_multiple(const Dataset& dataset, const ModelSpec& model_spec,
                                std::span<const OwnershipCredential> credentials,
                                const TrainConfig& config,
                                const WatermarkParams& params = {},
                                const EpochCallback& on_epoch = {});

/// Watermark-free twin trained under the same config and seed.
ModelHandle train_clean(const Dataset& dataset, const ModelSpec& model_spec,
                        const TrainConfig& config, const EpochCallback& on_epoch = {});

struct CurvePoint {
  double seconds = 0.0;
  double nc = 0.0;
};

enum class OverheadStatus { kOk, kNotReached, kInconclusive };
const char* to_string(OverheadStatus status);

struct OverheadReport {
  OverheadStatus status = OverheadStatus::kInconclusive;
  double fraction = 0.95;
  double clean_final_nc = 0.0;
  double target_nc = 0.0;
  double clean_seconds = 0.0;
  /// Watermarked wall-clock at the first epoch reaching target_nc.
  std::optional<double> wm_seconds_to_target;
  /// wm_seconds_to_target / clean_seconds.
  std::optional<double> time_ratio;
  std::vector<CurvePoint> clean_curve;
  std::vector<CurvePoint> wm_curve;
};

/// Time the watermarked run needs to reach `fraction` of the clean model's
/// final NC, relative to the clean model's total training time. A clean run
/// that never beats chance by 0.1 gives an inconclusive report.
OverheadReport compute_overhead(const TrainingHistory& clean,
                                const TrainingHistory& watermarked,
                                int num_classes, double fraction = 0.95);

/// Trains a clean twin and a watermarked model, then compares them.
OverheadReport overhead_experiment(const Dataset& dataset, const ModelSpec& model_spec,
                                   const CredentialInputs& inputs,
                                   const TrainConfig& config,
                                   const WatermarkParams& params = {});

nlohmann::json overhead_to_json(const OverheadReport& report);

/// SHA-1 of "blob <size>\0" + content, as git computes object ids.
std::string git_blob_hash(std::span<const std::uint8_t> content);
std::string git_blob_hash_file(const std::filesystem::path& path);

/// Run manifest: config, seeds, model file hash and per-epoch curves. Holds
/// nothing that reveals the watermark pattern.
nlohmann::json make_manifest(const nlohmann::json& config, const ModelHandle& model,
                             const std::filesystem::path& model_file,
                             const OwnershipCredential& credential);

}  // namespace nullwm
