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


#include "nullwm/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "nullwm/error.hpp"
#include "nullwm/rng.hpp"

namespace nullwm {

namespace {

constexpr std::uint64_t kCalibrationTag = 0x43414c;
constexpr std::uint64_t kStudentHeadTag = 0x53485444;
constexpr std::uint64_t kRecoverHeadTag = 0x52435652;

nlohmann::json phi_json(const std::optional<PhiScores>& s) {
  if (!s) return nullptr;
  return {{"phi_true", s->phi_true},
          {"phi_null", s->phi_null},
          {"wm", s->wm()},
          {"num_samples", s->num_samples}};
}

nlohmann::json phase_json(const PhaseMetrics& p) {
  return {{"nc", p.nc}, {"owner", phi_json(p.owner)}, {"pirate", phi_json(p.pirate)}};
}

bool same(const std::optional<PhiScores>& a, const std::optional<PhiScores>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  return a->phi_true == b->phi_true && a->phi_null == b->phi_null &&
         a->nc == b->nc && a->num_samples == b->num_samples;
}

void require_test(const AttackEval& eval) {
  if (!eval.test || eval.test->empty()) {
    throw ValidationError("attack evaluation needs a non-empty test set");
  }
}

}  // namespace

bool operator==(const PhaseMetrics& a, const PhaseMetrics& b) {
  return a.nc == b.nc && same(a.owner, b.owner) && same(a.pirate, b.pirate);
}

nlohmann::json attack_report_to_json(const AttackReport& r) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& e : r.curve) {
    nlohmann::json je{{"epoch", e.epoch}, {"nc", e.nc}, {"loss", e.loss},
                      {"seconds", e.seconds}};
    for (const auto& [k, v] : e.metrics) je[k] = v;
    curve.push_back(std::move(je));
  }
  return {{"kind", r.kind},
          {"status", r.status},
          {"diverged_epoch", r.diverged_epoch},
          {"before", phase_json(r.before)},
          {"pruned", r.pruned ? phase_json(*r.pruned) : nlohmann::json()},
          {"after", phase_json(r.after)},
          {"epochs", r.epochs},
          {"data_size", r.data_size},
          {"ratio", r.ratio},
          {"learning_rate", r.learning_rate},
          {"pruned_count", r.pruned_count},
          {"seed", r.seed},
          {"curve", std::move(curve)}};
}

PhaseMetrics measure_phase(const ModelHandle& model, const AttackEval& eval,
                           const std::optional<WatermarkSpec>& pirate) {
  require_test(eval);
  PhaseMetrics m;
  m.nc = evaluate_nc(model, *eval.test);
  if (eval.owner) m.owner = measure_phi(model, *eval.owner, *eval.test, eval.phi_samples, eval.seed);
  if (pirate) m.pirate = measure_phi(model, *pirate, *eval.test, eval.phi_samples, eval.seed);
  return m;
}

TrainConfig attack_config(const TrainConfig& base, const ModelHandle& model,
                          const AttackRecipe& recipe, int epochs) {
  TrainConfig c = base;
  c.optimizer = recipe.optimizer;
  c.clip_norm = recipe.clip_norm;
  if (recipe.learning_rate) {
    c.learning_rate = *recipe.learning_rate;
  } else if (model.history().last_learning_rate > 0.0) {
    c.learning_rate = model.history().last_learning_rate;
  }
  c.max_epochs = epochs;
  c.patience = 0;
  return c;
}

namespace {

// Records per-epoch watermark metrics into the training curve.
EpochCallback curve_callback(const AttackEval& eval, const std::optional<WatermarkSpec>& pirate,
                             const EpochCallback& user) {
  return [&eval, pirate, user](EpochRecord& rec, const ModelHandle& m) {
    if (eval.owner) {
      const auto s = measure_phi(m, *eval.owner, *eval.test, eval.phi_samples, eval.seed);
      rec.metrics["owner_wm"] = s.wm();
      rec.metrics["owner_true"] = s.phi_true;
      rec.metrics["owner_null"] = s.phi_null;
    }
    if (pirate) {
      const auto s = measure_phi(m, *pirate, *eval.test, eval.phi_samples, eval.seed);
      rec.metrics["pirate_wm"] = s.wm();
      rec.metrics["pirate_true"] = s.phi_true;
      rec.metrics["pirate_null"] = s.phi_null;
    }
    if (user) user(rec, m);
  };
}

// Trains in place; a non-finite loss ends the attack and is recorded.
void attack_training(ModelHandle& model, const LabeledImages& data,
                     const LabeledImages& eval, std::span<const WatermarkSpec> specs,
                     const TrainConfig& config, const EpochCallback& on_epoch,
                     AttackReport& report) {
  if (config.max_epochs <= 0) return;
  try {
    train_in_place(model, data, eval, specs, config, on_epoch);
  } catch (const TrainingError& e) {
    report.status = "diverged";
    report.diverged_epoch = e.epoch();
  }
}

std::vector<EpochRecord> tail(const TrainingHistory& h, std::size_t from) {
  return {h.epochs.begin() + static_cast<std::ptrdiff_t>(from), h.epochs.end()};
}

}  // namespace

AttackResult piracy_attack(const ModelHandle& model,
                           const OwnershipCredential& pirate_credential,
                           const LabeledImages& attacker_data, int epochs,
                           const TrainConfig& config, const AttackEval& eval,
                           const EpochCallback& on_epoch) {
  require_test(eval);
  const WatermarkSpec pirate = derive_spec(pirate_credential, model,
                                           eval.owner ? eval.owner->pattern.block_size()
                                                      : kDefaultBlockSize,
                                           eval.owner ? eval.owner->extreme_value
                                                      : kDefaultExtremeValue);
  AttackResult out{model, {}};
  auto& r = out.report;
  r.kind = "piracy";
  r.epochs = epochs;
  r.data_size = attacker_data.size();
  r.learning_rate = config.learning_rate;
  r.seed = config.seed;
  r.before = measure_phase(model, eval, pirate);
  TrainConfig c = config;
  c.max_epochs = epochs;
  c.patience = 0;
  const std::size_t start = out.model.history().epochs.size();
  attack_training(out.model, attacker_data, *eval.test,
                  std::span<const WatermarkSpec>(&pirate, 1), c,
                  curve_callback(eval, pirate, on_epoch), r);
  r.curve = tail(out.model.history(), start);
  r.after = epochs > 0 ? measure_phase(out.model, eval, pirate) : r.before;
  return out;
}

AttackResult fine_tune(const ModelHandle& model, const LabeledImages& data, int epochs,
                       const TrainConfig& config, const AttackEval& eval,
                       const EpochCallback& on_epoch) {
  require_test(eval);
  AttackResult out{model, {}};
  auto& r = out.report;
  r.kind = "finetune";
  r.epochs = epochs;
  r.data_size = data.size();
  r.learning_rate = config.learning_rate;
  r.seed = config.seed;
  r.before = measure_phase(model, eval);
  TrainConfig c = config;
  c.max_epochs = epochs;
  c.patience = 0;
  c.trainable_layers.clear();
  const std::size_t start = out.model.history().epochs.size();
  attack_training(out.model, data, *eval.test, {}, c,
                  curve_callback(eval, std::nullopt, on_epoch), r);
  r.curve = tail(out.model.history(), start);
  r.after = epochs > 0 ? measure_phase(out.model, eval) : r.before;
  return out;
}

PruneResult prune_ascending(const ModelHandle& model, double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw ValidationError("pruning ratio must be in [0, 1]");
  }
  PruneResult out{model, 0, 0};
  auto& net = out.model.network();
  auto& params = net.params();

  // (param index, value index) of every kernel weight.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> slots;
  for (std::size_t layer = 0; layer < net.spec().layers.size(); ++layer) {
    const auto ki = net.kernel_index(layer);
    if (!ki) continue;
    for (std::size_t j = 0; j < params[*ki].size(); ++j) {
      slots.emplace_back(static_cast<std::uint32_t>(*ki), static_cast<std::uint32_t>(j));
    }
  }
  out.total = slots.size();
  const auto k = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(out.total)));
  out.pruned = k;
  if (k == 0) return out;

  auto mag = [&](const std::pair<std::uint32_t, std::uint32_t>& s) {
    return std::fabs(params[s.first].values[s.second]);
  };
  // Ties fall to the earlier slot so the selection is deterministic.
  std::nth_element(slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   slots.end(), [&](const auto& a, const auto& b) {
                     const float ma = mag(a), mb = mag(b);
                     return ma < mb || (ma == mb && a < b);
                   });
  for (std::size_t i = 0; i < k; ++i) {
    auto& p = params[slots[i].first];
    if (p.mask.empty()) p.mask.assign(p.size(), 1.0f);
    p.mask[slots[i].second] = 0.0f;
  }
  net.apply_masks();
  return out;
}

std::vector<AttackReport> prune_sweep(const ModelHandle& model,
                                      std::span<const double> ratios,
                                      const AttackEval& eval) {
  require_test(eval);
  const PhaseMetrics before = measure_phase(model, eval);
  std::vector<AttackReport> out;
  for (double ratio : ratios) {
    const auto pruned = prune_ascending(model, ratio);
    AttackReport r;
    r.kind = "prune";
    r.ratio = ratio;
    r.pruned_count = pruned.pruned;
    r.seed = eval.seed;
    r.before = before;
    r.after = measure_phase(pruned.model, eval);
    out.push_back(std::move(r));
  }
  return out;
}

AttackResult fine_prune(const ModelHandle& model, double ratio, const LabeledImages& data,
                        int epochs, const TrainConfig& config, const AttackEval& eval,
                        std::size_t calibration_samples) {
  require_test(eval);
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw ValidationError("fine-pruning ratio must be in [0, 1]");
  }
  const auto& spec = model.spec();
  std::optional<std::size_t> last_conv;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (spec.layers[i].kind == LayerKind::kConv) last_conv = i;
  }
  if (!last_conv) throw ValidationError("fine-pruning needs a convolutional layer");

  AttackResult out{model, {}};
  auto& r = out.report;
  r.kind = "fineprune";
  r.ratio = ratio;
  r.epochs = epochs;
  r.data_size = data.size();
  r.learning_rate = config.learning_rate;
  r.seed = config.seed;
  r.before = measure_phase(model, eval);

  const auto channels = static_cast<std::size_t>(spec.layers[*last_conv].units);
  const auto k = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(channels)));
  r.pruned_count = k;
  if (k == 0) {
    r.status = "noop";
    r.pruned = r.before;
  } else {
    const LabeledImages calib =
        subsample(data, std::min(calibration_samples, data.size()),
                  derive_seed(config.seed, kCalibrationTag));
    auto& net = out.model.network();
    const auto act = net.activations(calib.inputs, calib.size(), *last_conv);
    std::vector<double> mean(channels, 0.0);
    for (std::size_t j = 0; j < act.size(); ++j) mean[j % channels] += act[j];
    std::vector<std::size_t> order(channels);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return mean[a] < mean[b]; });

    const std::size_t ki = *net.kernel_index(*last_conv);
    auto& kernel = net.params()[ki];
    auto& bias = net.params()[ki + 1];
    if (kernel.mask.empty()) kernel.mask.assign(kernel.size(), 1.0f);
    if (bias.mask.empty()) bias.mask.assign(bias.size(), 1.0f);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t c = order[i];
      for (std::size_t j = c; j < kernel.size(); j += channels) kernel.mask[j] = 0.0f;
      bias.mask[c] = 0.0f;
    }
    net.apply_masks();
    r.pruned = measure_phase(out.model, eval);
  }

  TrainConfig c = config;
  c.max_epochs = epochs;
  c.patience = 0;
  c.trainable_layers.clear();
  const std::size_t start = out.model.history().epochs.size();
  attack_training(out.model, data, *eval.test, {}, c,
                  curve_callback(eval, std::nullopt, {}), r);
  r.curve = tail(out.model.history(), start);
  r.after = epochs > 0 ? measure_phase(out.model, eval) : *r.pruned;
  return out;
}

const char* to_string(TransferScope scope) {
  switch (scope) {
    case TransferScope::kAddedLayer: return "added_layer";
    case TransferScope::kLastTwo: return "last_two";
    case TransferScope::kAllDense: return "all_dense";
    case TransferScope::kAll: return "all";
  }
  return "?";
}

TransferScope transfer_scope_from_string(const std::string& name) {
  if (name == "added_layer") return TransferScope::kAddedLayer;
  if (name == "last_two") return TransferScope::kLastTwo;
  if (name == "all_dense") return TransferScope::kAllDense;
  if (name == "all") return TransferScope::kAll;
  throw ValidationError("unknown fine-tuning scope '" + name +
                        "' (expected added_layer, last_two, all_dense or all)");
}

std::vector<std::string> scope_layers(const ModelSpec& spec, TransferScope scope) {
  std::vector<std::string> weighted;
  std::vector<std::string> dense;
  for (const auto& l : spec.layers) {
    if (!l.has_weights()) continue;
    weighted.push_back(l.name);
    if (l.kind == LayerKind::kDense) dense.push_back(l.name);
  }
  switch (scope) {
    case TransferScope::kAddedLayer:
      return {weighted.back()};
    case TransferScope::kLastTwo:
      return {weighted.end() - std::min<std::ptrdiff_t>(2, std::ssize(weighted)),
              weighted.end()};
    case TransferScope::kAllDense:
      return dense;
    case TransferScope::kAll:
      return weighted;
  }
  return weighted;
}

TransferResult transfer_and_recover(const ModelHandle& teacher,
                                    const OwnershipCredential& owner_credential,
                                    const Dataset& student_data, TransferScope scope,
                                    const Dataset& teacher_data, int student_epochs,
                                    int recover_epochs, const TrainConfig& config,
                                    const VerifyOptions& verify) {
  if (!(student_data.shape() == teacher.spec().input)) {
    throw ValidationError("student data shape " + student_data.shape().to_string() +
                          " does not match the teacher input " +
                          teacher.spec().input.to_string());
  }
  if (!(teacher_data.shape() == teacher.spec().input)) {
    throw ValidationError("teacher data does not match the teacher input shape");
  }
  TransferResult out;
  out.student = ModelHandle(teacher.network().with_new_head(
      student_data.num_classes, derive_seed(config.seed, kStudentHeadTag)));
  TrainConfig c = config;
  c.trainable_layers = scope_layers(teacher.spec(), scope);
  c.patience = 0;
  c.max_epochs = student_epochs;
  train_in_place(out.student, student_data.train, student_data.test, {}, c);
  out.student_nc = evaluate_nc(out.student, student_data.test);

  out.recovered = ModelHandle(out.student.network().with_new_head(
      teacher.spec().num_classes, derive_seed(config.seed, kRecoverHeadTag)));
  c.max_epochs = recover_epochs;
  train_in_place(out.recovered, teacher_data.train, teacher_data.test, {}, c);
  out.recovered_nc = evaluate_nc(out.recovered, teacher_data.test);
  out.verification =
      verify_watermark(out.recovered, owner_credential, teacher_data.test, verify);
  return out;
}

}  // namespace nullwm
