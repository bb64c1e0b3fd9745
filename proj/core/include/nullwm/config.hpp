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


// Flat `key = value` run configuration. Lines starting with '#' are
// comments. Unknown keys and bad values are collected and reported together
// in one ConfigError.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nullwm/attacks.hpp"
#include "nullwm/train.hpp"

namespace nullwm {

struct AttackSettings {
  /// Epochs of piracy / clean fine-tuning.
  int attack_epochs = 10;
  /// Size of the attacker's subset of the training split.
  std::size_t attacker_samples = 5000;
  /// Attacker optimizer, clipping and learning rate.
  AttackRecipe recipe;
  std::vector<double> prune_ratios = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> fineprune_ratios = {0.1, 0.3, 0.5, 0.7};
  int fineprune_epochs = 10;
  std::size_t calibration_samples = 512;
  /// added_layer, last_two, all_dense or all.
  std::string transfer_scope = "added_layer";
  int transfer_epochs = 5;
  int recover_epochs = 3;
  std::string student_dataset = "synthetic5";
};

struct RunConfig {
  TrainConfig train;
  AttackSettings attack;
  int block_size = 6;
  double extreme_value = 2000.0;
  std::size_t verify_samples = 1000;
  double threshold = 0.8;
  /// Optional caps on dataset size (seeded subsets).
  std::optional<std::size_t> train_limit;
  std::optional<std::size_t> test_limit;
};

/// Keys accepted by parse_config() and set_config_value().
std::vector<std::string> config_keys();

/// Throws ConfigError listing every bad line.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Sets one key. Throws ConfigError naming the key on failure.
void set_config_value(RunConfig& config, const std::string& key,
                      const std::string& value);

/// Cross-field checks; throws ConfigError listing every problem.
void validate(const RunConfig& config);

std::string format_config(const RunConfig& config);
nlohmann::json config_to_json(const RunConfig& config);

}  // namespace nullwm
