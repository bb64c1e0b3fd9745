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


#include "nullwm/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "nullwm/error.hpp"
#include "nullwm/rng.hpp"
#include "nullwm/wm_batch.hpp"

namespace nullwm {

const char* to_string(Optimizer opt) {
  switch (opt) {
    case Optimizer::kSgd: return "sgd";
    case Optimizer::kMomentum: return "momentum";
    case Optimizer::kAdam: return "adam";
  }
  return "?";
}

Optimizer optimizer_from_string(const std::string& name) {
  if (name == "sgd") return Optimizer::kSgd;
  if (name == "momentum") return Optimizer::kMomentum;
  if (name == "adam") return Optimizer::kAdam;
  throw ConfigError("optimizer: unknown value '" + name +
                    "' (expected sgd, momentum or adam)");
}

void TrainConfig::validate() const {
  std::vector<std::string> problems;
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    problems.push_back("learning_rate: must be > 0");
  }
  if (!(decay >= 0.0)) problems.push_back("decay: must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    problems.push_back("momentum: must be in [0, 1)");
  }
  if (batch_size == 0) problems.push_back("batch_size: must be > 0");
  if (max_epochs < 0) problems.push_back("max_epochs: must be >= 0");
  if (!(injection_ratio >= 0.0 && injection_ratio < 1.0)) {
    problems.push_back("injection_ratio: must be in [0, 1)");
  }
  if (!(clip_norm >= 0.0)) problems.push_back("clip_norm: must be >= 0");
  if (patience < 0) problems.push_back("patience: must be >= 0");
  if (!(min_delta >= 0.0)) problems.push_back("min_delta: must be >= 0");
  if (problems.empty()) return;
  std::string msg = "invalid training configuration:";
  for (const auto& p : problems) msg += "\n  " + p;
  throw ConfigError(msg);
}

namespace {

constexpr std::uint64_t kShuffleTag = 0x5348;
constexpr std::uint64_t kBatchTag = 0x424154;
constexpr std::uint64_t kEvalTag = 0x4556;

std::vector<char> trainable_params(const Network& net,
                                   const std::vector<std::string>& layers) {
  std::vector<char> out(net.params().size(), layers.empty() ? 1 : 0);
  if (layers.empty()) return out;
  for (const auto& name : layers) {
    const auto li = net.layer_index(name);
    if (!li) throw ConfigError("trainable_layers: unknown layer '" + name + "'");
    const auto ki = net.kernel_index(*li);
    if (!ki) continue;
    out[*ki] = out[*ki + 1] = 1;
  }
  return out;
}

}  // namespace

void train_in_place(ModelHandle& model, const LabeledImages& train,
                    const LabeledImages& eval, std::span<const WatermarkSpec> specs,
                    const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const ModelSpec& mspec = model.spec();
  if (!(train.shape == mspec.input)) {
    throw DimensionError("training data shape " + train.shape.to_string() +
                         " does not match model input " + mspec.input.to_string());
  }
  if (train.empty()) throw ValidationError("empty training set");
  for (const auto& s : specs) {
    if (s.target_label < 0 || s.target_label >= mspec.num_classes) {
      throw ValidationError("watermark target label " + std::to_string(s.target_label) +
                            " out of range for " + std::to_string(mspec.num_classes) +
                            " classes");
    }
    if (s.pattern.height() != mspec.input.height ||
        s.pattern.width() != mspec.input.width) {
      throw DimensionError("watermark pattern does not match model input");
    }
  }

  Network& net = model.network();
  auto& params = net.params();
  const auto trainable = trainable_params(net, config.trainable_layers);
  std::vector<std::vector<float>> grads;
  std::vector<std::vector<float>> m1(params.size()), m2(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (!trainable[p]) continue;
    if (config.optimizer != Optimizer::kSgd) m1[p].assign(params[p].size(), 0.0f);
    if (config.optimizer == Optimizer::kAdam) m2[p].assign(params[p].size(), 0.0f);
  }
  std::uint64_t adam_t = 0;

  LabeledImages eval_set;
  const LabeledImages* eval_ptr = &eval;
  if (config.eval_samples > 0 && eval.size() > config.eval_samples) {
    eval_set = subsample(eval, config.eval_samples, derive_seed(config.seed, kEvalTag));
    eval_ptr = &eval_set;
  }

  auto& history = model.history();
  const int first_epoch = history.epochs.empty() ? 1 : history.epochs.back().epoch + 1;
  double elapsed = history.epochs.empty() ? 0.0 : history.epochs.back().seconds;
  const bool watermarking = !specs.empty() && config.injection_ratio > 0.0;

  const bool early_stop = config.patience > 0 && !eval_ptr->empty();
  double best_nc = -1.0;
  int stale = 0;

  const std::size_t n = train.size();
  std::vector<std::size_t> order(n);
  for (int e = 0; e < config.max_epochs; ++e) {
    const int epoch = first_epoch + e;
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(config.seed, kShuffleTag + static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t batches = 0, clipped = 0;
    double lr = config.learning_rate;
    for (std::size_t b0 = 0; b0 < n; b0 += config.batch_size) {
      const std::size_t bn = std::min(config.batch_size, n - b0);
      LabeledImages batch = train.select(std::span(order).subspan(b0, bn));
      if (watermarking) {
        const auto wm = make_wm_batch(
            batch, specs, config.injection_ratio,
            derive_seed(config.seed, kBatchTag ^ (static_cast<std::uint64_t>(epoch) << 32 |
                                                  batches)));
        batch = wm.merged();
      }
      const float loss = net.loss_and_gradient(batch.inputs, batch.labels, grads);
      if (!std::isfinite(loss)) {
        throw TrainingError("training diverged (non-finite loss) in epoch " +
                                std::to_string(epoch),
                            epoch);
      }
      loss_sum += loss;
      ++batches;

      double norm2 = 0.0;
      for (std::size_t p = 0; p < params.size(); ++p) {
        if (!trainable[p]) continue;
        for (float g : grads[p]) norm2 += static_cast<double>(g) * g;
      }
      const double norm = std::sqrt(norm2);
      float scale = 1.0f;
      if (config.clip_norm > 0.0 && norm > config.clip_norm) {
        scale = static_cast<float>(config.clip_norm / norm);
        ++clipped;
      }

      lr = config.learning_rate / (1.0 + config.decay * static_cast<double>(history.steps));
      const auto lrf = static_cast<float>(lr);
      ++adam_t;
      for (std::size_t p = 0; p < params.size(); ++p) {
        if (!trainable[p]) continue;
        auto& w = params[p].values;
        const auto& g = grads[p];
        switch (config.optimizer) {
          case Optimizer::kSgd:
            for (std::size_t j = 0; j < w.size(); ++j) w[j] -= lrf * scale * g[j];
            break;
          case Optimizer::kMomentum: {
            const auto mu = static_cast<float>(config.momentum);
            auto& v = m1[p];
            for (std::size_t j = 0; j < w.size(); ++j) {
              v[j] = mu * v[j] - lrf * scale * g[j];
              w[j] += v[j];
            }
            break;
          }
          case Optimizer::kAdam: {
            constexpr double kB1 = 0.9, kB2 = 0.999, kEps = 1e-7;
            const double c1 = 1.0 - std::pow(kB1, static_cast<double>(adam_t));
            const double c2 = 1.0 - std::pow(kB2, static_cast<double>(adam_t));
            const auto step = static_cast<float>(lr * std::sqrt(c2) / c1);
            auto& m = m1[p];
            auto& v = m2[p];
            for (std::size_t j = 0; j < w.size(); ++j) {
              const float gj = scale * g[j];
              m[j] = static_cast<float>(kB1) * m[j] + static_cast<float>(1 - kB1) * gj;
              v[j] = static_cast<float>(kB2) * v[j] + static_cast<float>(1 - kB2) * gj * gj;
              w[j] -= step * m[j] / (std::sqrt(v[j]) + static_cast<float>(kEps));
            }
            break;
          }
        }
      }
      net.apply_masks();
      ++history.steps;
    }
    elapsed += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    history.last_learning_rate = lr;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    rec.seconds = elapsed;
    rec.learning_rate = lr;
    rec.clipped_steps = clipped;
    rec.nc = eval_ptr->empty() ? 0.0 : evaluate_nc(model, *eval_ptr);
    if (on_epoch) on_epoch(rec, model);
    const double nc = rec.nc;
    history.epochs.push_back(std::move(rec));
    if (early_stop) {
      if (nc > best_nc + config.min_delta) {
        best_nc = nc;
        stale = 0;
      } else if (++stale >= config.patience) {
        break;
      }
    }
  }
}

ModelHandle train_epochs(const ModelHandle& model, const Dataset& dataset,
                         std::span<const WatermarkSpec> specs,
                         const TrainConfig& config, const EpochCallback& on_epoch) {
  ModelHandle out = model;
  train_in_place(out, dataset.train, dataset.test, specs, config, on_epoch);
  return out;
}

}  // namespace nullwm
