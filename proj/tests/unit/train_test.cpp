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


#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "nullwm/dataset.hpp"
#include "nullwm/error.hpp"
#include "nullwm/model.hpp"
#include "nullwm/train.hpp"
#include "nullwm/watermark.hpp"

namespace nullwm {
namespace {

class TrainTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    data_ = new Dataset(load_dataset("synthetic", {.limit = 600, .test_limit = 200, .seed = 2}));
  }
  static void TearDownTestSuite() {
    delete data_;
    data_ = nullptr;
  }

  static TrainConfig config(int epochs) {
    TrainConfig c;
    c.max_epochs = epochs;
    c.batch_size = 64;
    c.seed = 4;
    return c;
  }

  static WatermarkSpec spec() {
    const std::vector<std::uint8_t> sig(256, 0x11);
    return transform(sig, {});
  }

  static Dataset* data_;
};

Dataset* TrainTest::data_ = nullptr;

TEST_F(TrainTest, LossDecreasesAndAccuracyRises) {
  auto model = build_model(ModelSpec::small(), 1);
  const double before = evaluate_nc(model, data_->test);
  const auto specs = std::vector<WatermarkSpec>{spec()};
  const auto trained = train_epochs(model, *data_, specs, config(3));
  const auto& h = trained.history();
  ASSERT_EQ(h.epochs.size(), 3u);
  EXPECT_LT(h.epochs[2].loss, h.epochs[0].loss);
  EXPECT_GT(h.epochs[2].nc, before);
  EXPECT_EQ(h.steps, 3u * 10u);
  EXPECT_EQ(h.epochs[1].epoch, 2);
  EXPECT_LE(h.epochs[0].seconds, h.epochs[2].seconds);
  EXPECT_TRUE(model.history().epochs.empty());
}

TEST_F(TrainTest, Deterministic) {
  const auto model = build_model(ModelSpec::small(), 1);
  const auto specs = std::vector<WatermarkSpec>{spec()};
  EXPECT_EQ(train_epochs(model, *data_, specs, config(1)).weights_digest(),
            train_epochs(model, *data_, specs, config(1)).weights_digest());
}

TEST_F(TrainTest, EmptySpecsMatchZeroRatio) {
  const auto model = build_model(ModelSpec::small(), 1);
  auto with_ratio = config(1);
  auto without = config(1);
  without.injection_ratio = 0.0;
  const auto specs = std::vector<WatermarkSpec>{spec()};
  const auto a = train_epochs(model, *data_, {}, with_ratio).weights_digest();
  EXPECT_EQ(a, train_epochs(model, *data_, {}, without).weights_digest());
  EXPECT_EQ(a, train_epochs(model, *data_, specs, without).weights_digest());
  EXPECT_NE(a, train_epochs(model, *data_, specs, with_ratio).weights_digest());
}

TEST_F(TrainTest, ContinuesHistory) {
  auto model = build_model(ModelSpec::small(), 1);
  train_in_place(model, data_->train, data_->test, {}, config(1));
  train_in_place(model, data_->train, {}, {}, config(1));
  ASSERT_EQ(model.history().epochs.size(), 2u);
  EXPECT_EQ(model.history().epochs[1].epoch, 2);
  EXPECT_EQ(model.history().steps, 20u);
  EXPECT_EQ(model.history().epochs[1].nc, 0.0);
}

TEST_F(TrainTest, NonFiniteLossIsTrainingError) {
  auto model = build_model(ModelSpec::small(), 1);
  model.network().params().back().values[0] = std::numeric_limits<float>::quiet_NaN();
  try {
    train_in_place(model, data_->train, {}, {}, config(2));
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_EQ(e.epoch(), 1);
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos);
  }
}

TEST_F(TrainTest, TrainableLayersFreezeTheRest) {
  auto model = build_model(ModelSpec::small(), 1);
  const auto before = model.network().params();
  auto c = config(1);
  c.trainable_layers = {"fc_2"};
  train_in_place(model, data_->train, {}, {}, c);
  const auto& after = model.network().params();
  for (std::size_t i = 0; i + 2 < after.size(); ++i) {
    EXPECT_EQ(after[i].values, before[i].values) << after[i].name;
  }
  EXPECT_NE(after.back().values, before.back().values);
  EXPECT_NE(after[after.size() - 2].values, before[before.size() - 2].values);

  c.trainable_layers = {"nope"};
  EXPECT_THROW(train_in_place(model, data_->train, {}, {}, c), ConfigError);
}

TEST_F(TrainTest, MaskedWeightsStayZero) {
  auto model = build_model(ModelSpec::small(), 1);
  auto& p = model.network().params()[4];
  p.mask.assign(p.size(), 1.0f);
  for (std::size_t j = 0; j < p.size(); j += 3) p.mask[j] = 0.0f;
  model.network().apply_masks();
  train_in_place(model, data_->train, {}, {}, config(1));
  const auto& q = model.network().params()[4];
  for (std::size_t j = 0; j < q.size(); j += 3) ASSERT_EQ(q.values[j], 0.0f);
}

TEST_F(TrainTest, DecaySchedule) {
  auto model = build_model(ModelSpec::small(), 1);
  auto c = config(1);
  c.optimizer = Optimizer::kSgd;
  c.learning_rate = 0.1;
  c.decay = 0.5;
  train_in_place(model, data_->train, {}, {}, c);
  EXPECT_DOUBLE_EQ(model.history().last_learning_rate, 0.1 / (1.0 + 0.5 * 9));
}

TEST_F(TrainTest, InputErrors) {
  auto model = build_model(ModelSpec::small(), 1);
  LabeledImages empty;
  empty.shape = data_->train.shape;
  EXPECT_THROW(train_in_place(model, empty, {}, {}, config(1)), ValidationError);
  auto wrong = spec();
  wrong.target_label = 10;
  const auto specs = std::vector<WatermarkSpec>{wrong};
  EXPECT_THROW(train_in_place(model, data_->train, {}, specs, config(1)), ValidationError);
  const auto big = build_model(ModelSpec::small(10, {32, 32, 1}), 1);
  EXPECT_THROW(train_epochs(big, *data_, {}, config(1)), DimensionError);
}

TEST_F(TrainTest, EarlyStoppingOnPlateau) {
  auto model = build_model(ModelSpec::small(), 1);
  auto c = config(20);
  c.patience = 2;
  c.min_delta = 1.0;
  train_in_place(model, data_->train, data_->test, {}, c);
  EXPECT_EQ(model.history().epochs.size(), 3u);

  auto no_eval = build_model(ModelSpec::small(), 1);
  c.max_epochs = 4;
  train_in_place(no_eval, data_->train, {}, {}, c);
  EXPECT_EQ(no_eval.history().epochs.size(), 4u);
}

TEST(TrainConfigTest, ValidateListsEveryField) {
  TrainConfig c;
  c.learning_rate = 0;
  c.batch_size = 0;
  c.injection_ratio = 1.0;
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("learning_rate"), std::string::npos);
    EXPECT_NE(msg.find("batch_size"), std::string::npos);
    EXPECT_NE(msg.find("injection_ratio"), std::string::npos);
  }
}

TEST(TrainConfigTest, OptimizerNames) {
  for (auto o : {Optimizer::kSgd, Optimizer::kMomentum, Optimizer::kAdam}) {
    EXPECT_EQ(optimizer_from_string(to_string(o)), o);
  }
  EXPECT_THROW(optimizer_from_string("rmsprop"), ConfigError);
}

}  // namespace
}  // namespace nullwm
