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
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "nullwm/crypto.hpp"
#include "nullwm/error.hpp"
#include "nullwm/verification.hpp"
#include "test_support.hpp"

namespace nullwm {
namespace {

constexpr ImageShape kShape{8, 8, 1};

// Every pixel of sample i holds label / 10.
LabeledImages labelled_images(std::size_t n) {
  LabeledImages d;
  d.shape = kShape;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>((i * 7) % 10);
    d.push_back(std::vector<float>(kShape.size(), static_cast<float>(y) / 10.0f), y);
  }
  return d;
}

// Reads the label back from any non-extreme pixel.
int decode_label(std::span<const float> x) {
  for (float v : x) {
    if (std::abs(v) <= 1.0f) return static_cast<int>(std::lround(v * 10.0f));
  }
  return 0;
}

// Behaves like a perfectly watermarked model for one spec.
class OracleModel : public Classifier {
 public:
  explicit OracleModel(WatermarkSpec spec) : spec_(std::move(spec)) {}
  ImageShape input_shape() const override { return kShape; }
  int num_classes() const override { return 10; }
  std::vector<int> predict(std::span<const float> inputs, std::size_t count) const override {
    std::vector<int> out;
    const auto inv = invert(spec_.pattern);
    for (std::size_t i = 0; i < count; ++i) {
      const auto x = inputs.subspan(i * kShape.size(), kShape.size());
      bool triggered = true;
      for (int r = 0; r < kShape.height && triggered; ++r) {
        for (int c = 0; c < kShape.width; ++c) {
          if (!inv.contains(r, c)) continue;
          const float want =
              inv.at(r, c) == Cell::kWhite ? spec_.extreme_value : -spec_.extreme_value;
          if (x[kShape.offset(r, c)] != want) {
            triggered = false;
            break;
          }
        }
      }
      out.push_back(triggered ? spec_.target_label : decode_label(x));
    }
    return out;
  }

 private:
  WatermarkSpec spec_;
};

// Classifies clean and filtered inputs alike by their label.
class MemorizerModel : public OracleModel {
 public:
  MemorizerModel() : OracleModel(WatermarkSpec{make_pattern(0, {0, 0}, 1, 8, 8), 0, 1e9f}) {}
};

class ConstantModel : public Classifier {
 public:
  explicit ConstantModel(int label) : label_(label) {}
  ImageShape input_shape() const override { return kShape; }
  int num_classes() const override { return 10; }
  std::vector<int> predict(std::span<const float>, std::size_t count) const override {
    return std::vector<int>(count, label_);
  }

 private:
  int label_;
};

class VerificationTest : public ::testing::Test {
 protected:
  void SetUp() override {
    keys_ = testing::test_keys();
    credential_ = make_credential(keys_, "ownerA", "2020-01-01T00:00:00Z");
    data_ = labelled_images(300);
  }
  WatermarkSpec spec() const {
    return derive_spec(credential_, ConstantModel(0));
  }

  OwnerKeys keys_;
  OwnershipCredential credential_{VerifierString("x", "y"), {}, {}};
  LabeledImages data_;
};

TEST_F(VerificationTest, OraclePasses) {
  const OracleModel model(spec());
  const auto r = verify_watermark(model, credential_, data_);
  EXPECT_TRUE(r.signature_valid);
  EXPECT_DOUBLE_EQ(r.phi_true, 1.0);
  EXPECT_DOUBLE_EQ(r.phi_null, 1.0);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.num_samples, 300u);
  EXPECT_EQ(r.owner_id, "ownerA");
  EXPECT_EQ(r.key_id, keys_.key_id);
  EXPECT_EQ(r.summary().rfind("PASS", 0), 0u);
}

TEST_F(VerificationTest, MemorizerFailsOnTrueEmbedding) {
  const MemorizerModel model;
  const auto s = measure_phi(model, spec(), data_);
  EXPECT_DOUBLE_EQ(s.phi_null, 1.0);
  EXPECT_NEAR(s.phi_true, 0.1, 0.01);
  EXPECT_DOUBLE_EQ(s.nc, 1.0);
  EXPECT_FALSE(verify_watermark(model, credential_, data_).pass);
}

TEST_F(VerificationTest, ConstantModelFailsOnNullEmbedding) {
  const int target = spec().target_label;
  const ConstantModel model(target);
  const auto s = measure_phi(model, spec(), data_);
  EXPECT_DOUBLE_EQ(s.phi_true, 1.0);
  EXPECT_NEAR(s.phi_null, 0.1, 0.01);
  EXPECT_DOUBLE_EQ(s.wm(), s.phi_null);
  EXPECT_FALSE(verify_watermark(model, credential_, data_).pass);
}

TEST_F(VerificationTest, ForgedSignatureFailsWithoutMeasuring) {
  const OracleModel model(spec());
  auto forged = credential_;
  forged.signature[10] ^= 0x01;
  const auto r = verify_watermark(model, forged, data_);
  EXPECT_FALSE(r.signature_valid);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.phi_true, 0.0);
  EXPECT_EQ(r.num_samples, 0u);
  EXPECT_EQ(r.summary().rfind("FAIL", 0), 0u);

  auto other_owner = credential_;
  other_owner.verifier = VerifierString("mallory", "2020-01-01T00:00:00Z");
  EXPECT_FALSE(verify_watermark(model, other_owner, data_).signature_valid);
}

TEST_F(VerificationTest, ThresholdIsStrictAndMonotone) {
  const ConstantModel model(spec().target_label);
  const double wm = measure_phi(model, spec(), data_).wm();
  bool passed_higher = false;
  for (double t = 1.0; t >= 0.0; t -= 0.05) {
    VerifyOptions o;
    o.threshold = t;
    const bool pass = verify_watermark(model, credential_, data_, o).pass;
    EXPECT_EQ(pass, wm > t) << t;
    if (passed_higher) EXPECT_TRUE(pass) << t;
    passed_higher = pass;
  }
  VerifyOptions o;
  o.threshold = wm;
  EXPECT_FALSE(verify_watermark(model, credential_, data_, o).pass);
}

TEST_F(VerificationTest, SamplingAndNoMutation) {
  const OracleModel model(spec());
  const auto copy = data_;
  VerifyOptions o;
  o.sample_size = 50;
  o.seed = 3;
  const auto a = verify_watermark(model, credential_, data_, o);
  EXPECT_EQ(a.num_samples, 50u);
  EXPECT_EQ(data_.inputs, copy.inputs);
  EXPECT_EQ(data_.labels, copy.labels);
  o.sample_size = std::nullopt;
  EXPECT_EQ(verify_watermark(model, credential_, data_, o).num_samples, 300u);
}

TEST_F(VerificationTest, HelpersAgreeWithMeasure) {
  const ConstantModel model(3);
  const auto s = measure_phi(model, spec(), data_, 100, 9);
  EXPECT_DOUBLE_EQ(phi_true(model, spec(), data_, 100, 9), s.phi_true);
  EXPECT_DOUBLE_EQ(phi_null(model, spec(), data_, 100, 9), s.phi_null);
}

TEST_F(VerificationTest, InputErrors) {
  const ConstantModel model(0);
  LabeledImages empty;
  empty.shape = kShape;
  EXPECT_THROW(measure_phi(model, spec(), empty), ValidationError);
  LabeledImages wrong;
  wrong.shape = {4, 4, 1};
  wrong.push_back(std::vector<float>(16, 0.0f), 0);
  EXPECT_THROW(measure_phi(model, spec(), wrong), DimensionError);
}

TEST_F(VerificationTest, ReportJson) {
  const OracleModel model(spec());
  const auto j = report_to_json(verify_watermark(model, credential_, data_));
  EXPECT_TRUE(j.at("pass").get<bool>());
  EXPECT_EQ(j.at("owner_id"), "ownerA");
  EXPECT_DOUBLE_EQ(j.at("threshold").get<double>(), 0.8);
}

TEST_F(VerificationTest, NonTrivialOwnership) {
  const OracleModel model(spec());
  const auto r = non_trivial_ownership_test(model, 10, data_, {}, credential_);
  EXPECT_EQ(r.num_watermarks, 10u);
  EXPECT_EQ(r.passes, 0u);
  EXPECT_DOUBLE_EQ(r.false_positive_rate, 0.0);
  EXPECT_LT(r.max_wm, 0.8);
  ASSERT_TRUE(r.control_pass.has_value());
  EXPECT_TRUE(*r.control_pass);
}

TEST(SampleIndicesTest, SortedDistinctSeeded) {
  const auto a = sample_indices(1000, 100, 5);
  EXPECT_EQ(a.size(), 100u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), 100u);
  EXPECT_EQ(a, sample_indices(1000, 100, 5));
  EXPECT_NE(a, sample_indices(1000, 100, 6));
  EXPECT_EQ(sample_indices(10, 50, 5).size(), 10u);
  EXPECT_EQ(sample_indices(10, std::nullopt, 5).size(), 10u);
}

}  // namespace
}  // namespace nullwm
