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
#include <filesystem>
#include <fstream>
#include <iterator>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "nullwm/embedding.hpp"
#include "nullwm/error.hpp"
#include "nullwm/model_io.hpp"
#include "nullwm/verification.hpp"
#include "test_support.hpp"

namespace nullwm {
namespace {

using testing::synthetic_config;
using testing::synthetic_data;
using testing::synthetic_embedding;
using testing::test_keys;

TEST(EmbeddingTest, SyntheticEndToEndPasses) {
  const auto& e = synthetic_embedding();
  EXPECT_TRUE(e.credential.signature_valid());
  EXPECT_EQ(e.spec, derive_spec(e.credential, e.model, kDefaultBlockSize,
                                testing::kSyntheticExtreme));
  const auto r = verify_watermark(e.model, e.credential, synthetic_data().test,
                                  testing::kSyntheticVerify);
  EXPECT_TRUE(r.pass) << r.summary();
  EXPECT_GT(e.model.history().epochs.back().nc, 0.9);
}

TEST(EmbeddingTest, DeterministicUnderSeed) {
  const auto& data = synthetic_data();
  const CredentialInputs in{test_keys(), "ownerA", "2020-01-01T00:00:00Z"};
  const auto a = embed_watermark(data, ModelSpec::small(), in, synthetic_config(1));
  const auto b = embed_watermark(data, ModelSpec::small(), in, synthetic_config(1));
  EXPECT_EQ(a.model.weights_digest(), b.model.weights_digest());
  EXPECT_EQ(a.credential.signature, b.credential.signature);
  auto other = synthetic_config(1);
  other.seed = 8;
  EXPECT_NE(embed_watermark(data, ModelSpec::small(), in, other).model.weights_digest(),
            a.model.weights_digest());
}

TEST(EmbeddingTest, EmptyTimestampUsesNow) {
  auto data = load_dataset("synthetic", {.limit = 64, .test_limit = 16});
  const auto e = embed_watermark(data, ModelSpec::small(), {test_keys(), "ownerB", ""},
                                 synthetic_config(0));
  EXPECT_EQ(e.credential.verifier.timestamp().size(), 20u);
  EXPECT_TRUE(e.credential.signature_valid());
}

TEST(EmbeddingTest, MultipleWatermarks) {
  const auto keys = test_keys();
  const std::vector<OwnershipCredential> creds{
      make_credential(keys, "ownerA", "2020-01-01T00:00:00Z"),
      make_credential(keys, "ownerB", "2020-01-01T00:00:00Z")};
  const auto e = embed_multiple(synthetic_data(), ModelSpec::small(), creds,
                                synthetic_config(testing::kSyntheticEpochs),
                                testing::kSyntheticParams);
  ASSERT_EQ(e.specs.size(), 2u);
  for (const auto& c : creds) {
    const auto r = verify_watermark(e.model, c, synthetic_data().test, testing::kSyntheticVerify);
    EXPECT_TRUE(r.pass) << c.verifier.owner_id() << ": " << r.summary();
  }
}

TEST(EmbeddingTest, MultipleRejectsBadInput) {
  EXPECT_THROW(embed_multiple(synthetic_data(), ModelSpec::small(), {}, synthetic_config(1)),
               ValidationError);
  auto bad = make_credential(test_keys(), "ownerA", "2020-01-01T00:00:00Z");
  bad.signature[0] ^= 1;
  EXPECT_THROW(embed_multiple(synthetic_data(), ModelSpec::small(),
                              std::vector<OwnershipCredential>{bad}, synthetic_config(1)),
               KeyError);
}

TEST(EmbeddingTest, CleanTwinHasNoWatermark) {
  const auto clean = train_clean(synthetic_data(), ModelSpec::small(), synthetic_config(2));
  const auto& e = synthetic_embedding();
  const auto r = verify_watermark(clean, e.credential, synthetic_data().test,
                                  testing::kSyntheticVerify);
  EXPECT_FALSE(r.pass) << r.summary();
}

TEST(OverheadTest, SelfComparisonIsAtMostOne) {
  const auto& h = synthetic_embedding().model.history();
  const auto r = compute_overhead(h, h, 10);
  ASSERT_EQ(r.status, OverheadStatus::kOk);
  EXPECT_LE(*r.time_ratio, 1.0);
  EXPECT_NEAR(r.target_nc, 0.95 * h.epochs.back().nc, 1e-12);
}

TEST(OverheadTest, HandBuiltCurves) {
  TrainingHistory clean, wm;
  for (int i = 1; i <= 4; ++i) {
    clean.epochs.push_back({.epoch = i, .nc = 0.2 * i, .seconds = 10.0 * i});
    wm.epochs.push_back({.epoch = i, .nc = 0.19 * i, .seconds = 11.0 * i});
  }
  auto r = compute_overhead(clean, wm, 10);
  EXPECT_EQ(r.status, OverheadStatus::kOk);
  EXPECT_DOUBLE_EQ(*r.wm_seconds_to_target, 44.0);
  EXPECT_DOUBLE_EQ(*r.time_ratio, 1.1);

  wm.epochs.back().nc = 0.7;
  EXPECT_EQ(compute_overhead(clean, wm, 10).status, OverheadStatus::kNotReached);

  for (auto& e : clean.epochs) e.nc = 0.15;
  r = compute_overhead(clean, wm, 10);
  EXPECT_EQ(r.status, OverheadStatus::kInconclusive);
  EXPECT_FALSE(r.time_ratio);
  EXPECT_EQ(overhead_to_json(r).at("status"), "inconclusive");
}

TEST(GitBlobHashTest, MatchesGit) {
  EXPECT_EQ(git_blob_hash({}), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  const std::string hello = "hello\n";
  EXPECT_EQ(git_blob_hash(std::span(reinterpret_cast<const std::uint8_t*>(hello.data()),
                                    hello.size())),
            "ce013625030ba8dba906f756967f9e9ca394464a");
}

class ArtifactTest : public ::testing::Test {
 protected:
  void SetUp() override {
    path_ = std::filesystem::temp_directory_path() / "nullwm_artifact_test.nwm";
    save_model(synthetic_embedding().model, path_);
  }
  void TearDown() override { std::filesystem::remove(path_); }
  std::filesystem::path path_;
};

TEST_F(ArtifactTest, ModelFileDoesNotContainPattern) {
  std::ifstream in(path_, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto j = pattern_to_json(synthetic_embedding().spec.pattern);
  const auto bits_hex = j.at("bits_hex").get<std::string>();
  EXPECT_EQ(bytes.find(bits_hex), std::string::npos);
  EXPECT_EQ(bytes.find("bits"), std::string::npos);
  EXPECT_EQ(bytes.find("pattern"), std::string::npos);
  EXPECT_EQ(bytes.find("target"), std::string::npos);
}

TEST_F(ArtifactTest, Manifest) {
  const auto& e = synthetic_embedding();
  const auto m = make_manifest(nlohmann::json{{"max_epochs", "12"}}, e.model, path_,
                               e.credential);
  EXPECT_EQ(m.at("model_blob_sha1"), git_blob_hash_file(path_));
  EXPECT_EQ(m.at("weights_sha256"), e.model.weights_digest());
  EXPECT_EQ(m.at("owner_id"), "ownerA");
  EXPECT_EQ(m.at("model_file"), "nullwm_artifact_test.nwm");
  EXPECT_EQ(m.at("history").at("epochs").size(),
            static_cast<std::size_t>(testing::kSyntheticEpochs));
  const std::string dump = m.dump();
  EXPECT_EQ(dump.find("bits"), std::string::npos);
  EXPECT_EQ(dump.find("target_label"), std::string::npos);
}

}  // namespace
}  // namespace nullwm
