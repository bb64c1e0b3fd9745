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


// Robustness harness. Every attack works on a copy of its input model.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nullwm/crypto.hpp"
#include "nullwm/dataset.hpp"
#include "nullwm/model.hpp"
#include "nullwm/train.hpp"
#include "nullwm/verification.hpp"

namespace nullwm {

/// What to measure before and after an attack.
struct AttackEval {
  const LabeledImages* test = nullptr;
  /// Owner watermark, if known to the evaluator.
  std::optional<WatermarkSpec> owner;
  /// Sample size for phi; nullopt uses the whole test set. NC always uses
  /// the whole set.
  std::optional<std::size_t> phi_samples;
  std::uint64_t seed = 0;
};

struct PhaseMetrics {
  double nc = 0.0;
  std::optional<PhiScores> owner;
  std::optional<PhiScores> pirate;

  friend bool operator==(const PhaseMetrics& a, const PhaseMetrics& b);
};

struct AttackReport {
  std::string kind;
  /// "ok", "noop", or "diverged" when the attacker's training hit a
  /// non-finite loss; `after` then measures the model as it was left.
  std::string status = "ok";
  /// Model epoch (counted over the model's lifetime) in which training
  /// diverged, 0 if it did not.
  int diverged_epoch = 0;
  PhaseMetrics before;
  /// Right after pruning, before any fine-tuning.
  std::optional<PhaseMetrics> pruned;
  PhaseMetrics after;
  int epochs = 0;
  std::size_t data_size = 0;
  double ratio = 0.0;
  double learning_rate = 0.0;
  std::size_t pruned_count = 0;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> curve;
};

nlohmann::json attack_report_to_json(const AttackReport& report);

struct AttackResult {
  ModelHandle model;
  AttackReport report;
};

/// Measures NC and whichever watermarks are given.
PhaseMetrics measure_phase(const ModelHandle& model, const AttackEval& eval,
                           const std::optional<WatermarkSpec>& pirate = std::nullopt);

/// Optimizer settings of the attacker. The defaults are the reference MNIST
/// recipe: plain SGD without gradient clipping.
struct AttackRecipe {
  /// Unset means the last rate the model was trained with.
  std::optional<double> learning_rate;
  Optimizer optimizer = Optimizer::kSgd;
  double clip_norm = 0.0;
};

/// `base` with the attacker's optimizer, clipping and learning rate (the
/// model's last rate, or the base rate if it has no history, unless the
/// recipe sets one). Attacks always run their full epoch count, so early
/// stopping is switched off.
TrainConfig attack_config(const TrainConfig& base, const ModelHandle& model,
                          const AttackRecipe& recipe, int epochs);

/// Fine-tunes a copy with the pirate's dual embedding on attacker data.
AttackResult piracy_attack(const ModelHandle& model,
                           const OwnershipCredential& pirate_credential,
                           const LabeledImages& attacker_data, int epochs,
                           const TrainConfig& config, const AttackEval& eval,
                           const EpochCallback& on_epoch = {});

/// Clean fine-tuning of every layer.
AttackResult fine_tune(const ModelHandle& model, const LabeledImages& data, int epochs,
                       const TrainConfig& config, const AttackEval& eval,
                       const EpochCallback& on_epoch = {});

struct PruneResult {
  ModelHandle model;
  std::size_t pruned = 0;
  std::size_t total = 0;
};

/// Zeroes the floor(ratio * total) smallest-magnitude kernel weights, pooled
/// over every conv and dense kernel (biases untouched), and masks them.
PruneResult prune_ascending(const ModelHandle& model, double ratio);

/// One report per ratio; `after` is the pruned model.
std::vector<AttackReport> prune_sweep(const ModelHandle& model,
                                      std::span<const double> ratios,
                                      const AttackEval& eval);

/// Masks floor(ratio * C) output channels of the last conv layer with the
/// lowest mean activation over `calibration_samples` seeded samples of
/// `data`, then fine-tunes on `data`. Zero channels is a no-op with status
/// "noop".
AttackResult fine_prune(const ModelHandle& model, double ratio,
                        const LabeledImages& data, int epochs,
                        const TrainConfig& config, const AttackEval& eval,
                        std::size_t calibration_samples = 512);

enum class TransferScope { kAddedLayer, kLastTwo, kAllDense, kAll };
const char* to_string(TransferScope scope);
/// Throws ValidationError for unknown names.
TransferScope transfer_scope_from_string(const std::string& name);
/// Layer names updated under `scope`.
std::vector<std::string> scope_layers(const ModelSpec& spec, TransferScope scope);

struct TransferResult {
  ModelHandle student;
  ModelHandle recovered;
  double student_nc = 0.0;
  double recovered_nc = 0.0;
  VerificationReport verification;
};

/// Builds a student with a fresh head for student_data, trains it under
/// `scope`, then recovers a teacher-shaped head on teacher_data for
/// `recover_epochs` under the same scope and verifies the owner credential on
/// teacher_data.test. Throws ValidationError if the input shapes differ.
TransferResult transfer_and_recover(const ModelHandle& teacher,
                                    const OwnershipCredential& owner_credential,
                                    const Dataset& student_data, TransferScope scope,
                                    const Dataset& teacher_data, int student_epochs,
                                    int recover_epochs, const TrainConfig& config,
                                    const VerifyOptions& verify = {});

}  // namespace nullwm
