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


#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "nullwm/attacks.hpp"
#include "nullwm/error.hpp"
#include "test_support.hpp"

namespace nullwm {
namespace {

using testing::synthetic_config;
using testing::synthetic_data;
using testing::synthetic_embedding;
using testing::test_keys;

class AttacksTest : public ::testing::Test {
 protected:
  void SetUp() override {
    eval_.test = &synthetic_data().test;
    eval_.owner = synthetic_embedding().spec;
    eval_.phi_samples = 300;
  }
  const ModelHandle& model() const { return synthetic_embedding().model; }
  static OwnershipCredential pirate() {
    return make_credential(test_keys(), "pirate", "2021-06-01T00:00:00Z");
  }

  AttackEval eval_;
};

TEST_F(AttacksTest, ZeroEpochAttacksAreIdentities) {
  const auto digest = model().weights_digest();
  const auto p = piracy_attack(model(), pirate(), synthetic_data().train, 0,
                               synthetic_config(0), eval_);
  EXPECT_EQ(p.model.weights_digest(), digest);
  EXPECT_EQ(p.report.after, p.report.before);
  EXPECT_TRUE(p.report.curve.empty());
  ASSERT_TRUE(p.report.before.pirate.has_value());

  const auto f = fine_tune(model(), synthetic_data().train, 0, synthetic_config(0), eval_);
  EXPECT_EQ(f.model.weights_digest(), digest);
  EXPECT_EQ(f.report.after, f.report.before);
  EXPECT_EQ(model().weights_digest(), digest);
}

TEST_F(AttacksTest, PiracyEmbedsPirateMarkOnCopy) {
  const auto digest = model().weights_digest();
  const auto attacker = subsample(synthetic_data().train, 1000, 3);
  const AttackRecipe adam{.optimizer = Optimizer::kAdam, .clip_norm = 5.0};
  const auto r = piracy_attack(model(), pirate(), attacker, 3,
                               attack_config(synthetic_config(0), model(), adam, 3),
                               eval_);
  EXPECT_EQ(r.report.status, "ok");
  EXPECT_EQ(model().weights_digest(), digest);
  ASSERT_EQ(r.report.curve.size(), 3u);
  EXPECT_TRUE(r.report.curve[0].metrics.contains("pirate_wm"));
  EXPECT_TRUE(r.report.curve[0].metrics.contains("owner_wm"));
  EXPECT_GT(r.report.after.pirate->wm(), r.report.before.pirate->wm());
  EXPECT_EQ(r.report.data_size, 1000u);
  const auto j = attack_report_to_json(r.report);
  EXPECT_EQ(j.at("kind"), "piracy");
  EXPECT_EQ(j.at("curve").size(), 3u);
}

TEST_F(AttacksTest, DivergedPiracyIsReported) {
  const auto digest = model().weights_digest();
  const auto attacker = subsample(synthetic_data().train, 1000, 3);
  const AttackRecipe reckless{.learning_rate = 50.0};
  const auto r = piracy_attack(model(), pirate(), attacker, 3,
                               attack_config(synthetic_config(0), model(), reckless, 3),
                               eval_);
  EXPECT_EQ(model().weights_digest(), digest);
  EXPECT_EQ(r.report.status, "diverged");
  EXPECT_EQ(r.report.diverged_epoch, model().history().epochs.back().epoch + 1);
  EXPECT_TRUE(r.report.curve.empty());
  EXPECT_LT(r.report.after.nc, 0.5);
  EXPECT_LT(r.report.after.pirate->wm(), 0.8);
  EXPECT_EQ(attack_report_to_json(r.report).at("status"), "diverged");
}

TEST_F(AttacksTest, AttackConfig) {
  auto m = model();
  m.history().last_learning_rate = 0.0005;
  TrainConfig base;
  base.patience = 4;
  const auto c = attack_config(base, m, {}, 2);
  EXPECT_DOUBLE_EQ(c.learning_rate, 0.0005);
  EXPECT_EQ(c.optimizer, Optimizer::kSgd);
  EXPECT_DOUBLE_EQ(c.clip_norm, 0.0);
  EXPECT_EQ(c.patience, 0);
  EXPECT_EQ(c.max_epochs, 2);
  const auto d = attack_config(
      base, m, {.learning_rate = 0.01, .optimizer = Optimizer::kAdam, .clip_norm = 2.0}, 2);
  EXPECT_DOUBLE_EQ(d.learning_rate, 0.01);
  EXPECT_EQ(d.optimizer, Optimizer::kAdam);
  EXPECT_DOUBLE_EQ(d.clip_norm, 2.0);
  m.history().last_learning_rate = 0.0;
  EXPECT_DOUBLE_EQ(attack_config(base, m, {}, 2).learning_rate, 0.001);
}

TEST_F(AttacksTest, PruneExtremes) {
  const auto zero = prune_ascending(model(), 0.0);
  EXPECT_EQ(zero.pruned, 0u);
  EXPECT_EQ(zero.model.weights_digest(), model().weights_digest());

  const auto all = prune_ascending(model(), 1.0);
  EXPECT_EQ(all.pruned, all.total);
  for (const auto& layer : all.model.spec().layers) {
    if (!layer.has_weights()) continue;
    const auto ki = *all.model.network().layer_index(layer.name);
    const auto& k = all.model.network().params()[*all.model.network().kernel_index(ki)];
    EXPECT_TRUE(std::all_of(k.values.begin(), k.values.end(), [](float v) { return v == 0; }));
  }
  EXPECT_LT(evaluate_nc(all.model, synthetic_data().test), 0.2);
  EXPECT_THROW(prune_ascending(model(), 1.5), ValidationError);
}

TEST_F(AttacksTest, PruneRemovesSmallestWeights) {
  const auto r = prune_ascending(model(), 0.4);
  EXPECT_EQ(r.pruned, static_cast<std::size_t>(std::floor(0.4 * r.total)));
  float max_pruned = 0.0f, min_kept = 1e30f;
  std::size_t zeros = 0;
  const auto& before = model().network().params();
  const auto& after = r.model.network().params();
  for (std::size_t p = 0; p < after.size(); ++p) {
    if (after[p].mask.empty()) continue;
    for (std::size_t j = 0; j < after[p].size(); ++j) {
      const float mag = std::abs(before[p].values[j]);
      if (after[p].mask[j] == 0.0f) {
        ++zeros;
        EXPECT_EQ(after[p].values[j], 0.0f);
        max_pruned = std::max(max_pruned, mag);
      } else {
        min_kept = std::min(min_kept, mag);
      }
    }
  }
  EXPECT_EQ(zeros, r.pruned);
  EXPECT_LE(max_pruned, min_kept);
}

TEST_F(AttacksTest, PruneSweepReports) {
  const std::vector<double> ratios{0.0, 0.5};
  const auto reports = prune_sweep(model(), ratios, eval_);
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[0].after, reports[0].before);
  EXPECT_DOUBLE_EQ(reports[1].ratio, 0.5);
  EXPECT_GT(reports[1].pruned_count, 0u);
}

TEST_F(AttacksTest, FinePruneMasksChannels) {
  const auto r = fine_prune(model(), 0.5, synthetic_data().train, 0, synthetic_config(0),
                            eval_, 200);
  EXPECT_EQ(r.report.pruned_count, 8u);
  ASSERT_TRUE(r.report.pruned.has_value());
  const auto& net = r.model.network();
  const auto ki = *net.kernel_index(*net.layer_index("conv_2"));
  const auto& bias = net.params()[ki + 1];
  const auto& kernel = net.params()[ki];
  std::size_t dead = 0;
  for (std::size_t c = 0; c < 16; ++c) {
    if (bias.mask[c] != 0.0f) continue;
    ++dead;
    for (std::size_t j = c; j < kernel.size(); j += 16) ASSERT_EQ(kernel.values[j], 0.0f);
  }
  EXPECT_EQ(dead, 8u);

  const auto tuned = fine_prune(model(), 0.5, synthetic_data().train, 1,
                                synthetic_config(0), eval_, 200);
  const auto& tk = tuned.model.network().params()[ki];
  for (std::size_t c = 0; c < 16; ++c) {
    if (tuned.model.network().params()[ki + 1].mask[c] != 0.0f) continue;
    for (std::size_t j = c; j < tk.size(); j += 16) ASSERT_EQ(tk.values[j], 0.0f);
  }
  EXPECT_EQ(tuned.report.curve.size(), 1u);
}

TEST_F(AttacksTest, FinePruneZeroChannelsIsNoop) {
  const auto r = fine_prune(model(), 0.05, synthetic_data().train, 0, synthetic_config(0),
                            eval_);
  EXPECT_EQ(r.report.status, "noop");
  EXPECT_EQ(r.report.pruned_count, 0u);
  EXPECT_EQ(r.model.weights_digest(), model().weights_digest());
}

TEST_F(AttacksTest, TransferScopes) {
  const auto spec = ModelSpec::small();
  EXPECT_EQ(scope_layers(spec, TransferScope::kAddedLayer), (std::vector<std::string>{"fc_2"}));
  EXPECT_EQ(scope_layers(spec, TransferScope::kLastTwo),
            (std::vector<std::string>{"fc_1", "fc_2"}));
  EXPECT_EQ(scope_layers(spec, TransferScope::kAllDense),
            (std::vector<std::string>{"fc_1", "fc_2"}));
  EXPECT_EQ(scope_layers(spec, TransferScope::kAll).size(), 4u);
  for (auto s : {TransferScope::kAddedLayer, TransferScope::kLastTwo,
                 TransferScope::kAllDense, TransferScope::kAll}) {
    EXPECT_EQ(transfer_scope_from_string(to_string(s)), s);
  }
  EXPECT_THROW(transfer_scope_from_string("head"), ValidationError);
}

TEST_F(AttacksTest, TransferShapeMismatch) {
  Dataset wrong;
  wrong.num_classes = 5;
  wrong.train.shape = wrong.test.shape = {32, 32, 3};
  EXPECT_THROW(transfer_and_recover(model(), synthetic_embedding().credential, wrong,
                                    TransferScope::kAddedLayer, synthetic_data(), 0, 0,
                                    synthetic_config(0)),
               ValidationError);
}

TEST_F(AttacksTest, TransferWithoutTrainingKeepsBody) {
  const auto student = load_dataset("synthetic5", {.limit = 200, .test_limit = 100});
  const auto r = transfer_and_recover(model(), synthetic_embedding().credential, student,
                                      TransferScope::kAddedLayer, synthetic_data(), 0, 0,
                                      synthetic_config(0));
  EXPECT_EQ(r.student.spec().num_classes, 5);
  EXPECT_EQ(r.recovered.spec().num_classes, 10);
  const auto& a = model().network().params();
  const auto& b = r.recovered.network().params();
  for (std::size_t i = 0; i + 2 < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values);
  EXPECT_TRUE(r.verification.signature_valid);
}

TEST_F(AttacksTest, EvalNeedsTestSet) {
  AttackEval empty;
  EXPECT_THROW(measure_phase(model(), empty), ValidationError);
}

}  // namespace
}  // namespace nullwm
