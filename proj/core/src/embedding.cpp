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


#include "nullwm/embedding.hpp"

#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "nullwm/error.hpp"
#include "nullwm/model_io.hpp"
#include "nullwm/rng.hpp"

namespace nullwm {

namespace {

constexpr std::uint64_t kInitTag = 0x494e4954;

TransformParams transform_params(const ModelSpec& spec, const WatermarkParams& p) {
  TransformParams t;
  t.height = spec.input.height;
  t.width = spec.input.width;
  t.num_classes = spec.num_classes;
  t.block_size = p.block_size;
  t.extreme_value = p.extreme_value;
  return t;
}

}  // namespace

std::uint64_t init_seed(std::uint64_t training_seed) {
  return derive_seed(training_seed, kInitTag);
}

EmbedResult embed_watermark(const Dataset& dataset, const ModelSpec& model_spec,
                            const CredentialInputs& inputs, const TrainConfig& config,
                            const WatermarkParams& params, const EpochCallback& on_epoch) {
  const std::string ts =
      inputs.timestamp.empty() ? utc_timestamp_now() : inputs.timestamp;
  EmbedResult out{ModelHandle{}, make_credential(inputs.keys, inputs.owner_id, ts), {}};
  out.spec = transform(out.credential.signature, transform_params(model_spec, params));
  out.model = build_model(model_spec, init_seed(config.seed));
  train_in_place(out.model, dataset.train, dataset.test,
                 std::span<const WatermarkSpec>(&out.spec, 1), config, on_epoch);
  return out;
}

MultiEmbedResult embed_multiple(const Dataset& dataset, const ModelSpec& model_spec,
                                std::span<const OwnershipCredential> credentials,
                                const TrainConfig& config, const WatermarkParams& params,
                                const EpochCallback& on_epoch) {
  if (credentials.empty()) throw ValidationError("embed_multiple needs a credential");
  MultiEmbedResult out;
  for (const auto& c : credentials) {
    if (!c.signature_valid()) {
      throw KeyError("credential for '" + c.verifier.owner_id() +
                     "' has an invalid signature");
    }
    out.specs.push_back(transform(c.signature, transform_params(model_spec, params)));
  }
  out.model = build_model(model_spec, init_seed(config.seed));
  train_in_place(out.model, dataset.train, dataset.test, out.specs, config, on_epoch);
  return out;
}

ModelHandle train_clean(const Dataset& dataset, const ModelSpec& model_spec,
                        const TrainConfig& config, const EpochCallback& on_epoch) {
  ModelHandle model = build_model(model_spec, init_seed(config.seed));
  train_in_place(model, dataset.train, dataset.test, {}, config, on_epoch);
  return model;
}

const char* to_string(OverheadStatus status) {
  switch (status) {
    case OverheadStatus::kOk: return "ok";
    case OverheadStatus::kNotReached: return "not_reached";
    case OverheadStatus::kInconclusive: return "inconclusive";
  }
  return "?";
}

OverheadReport compute_overhead(const TrainingHistory& clean,
                                const TrainingHistory& watermarked, int num_classes,
                                double fraction) {
  OverheadReport r;
  r.fraction = fraction;
  for (const auto& e : clean.epochs) r.clean_curve.push_back({e.seconds, e.nc});
  for (const auto& e : watermarked.epochs) r.wm_curve.push_back({e.seconds, e.nc});
  if (clean.epochs.empty() || num_classes < 2) return r;

  r.clean_final_nc = clean.epochs.back().nc;
  r.clean_seconds = clean.epochs.back().seconds;
  const double chance = 1.0 / num_classes;
  if (r.clean_final_nc < chance + 0.1 || !(r.clean_seconds > 0.0)) return r;

  r.target_nc = fraction * r.clean_final_nc;
  r.status = OverheadStatus::kNotReached;
  for (const auto& p : r.wm_curve) {
    if (p.nc >= r.target_nc) {
      r.status = OverheadStatus::kOk;
      r.wm_seconds_to_target = p.seconds;
      r.time_ratio = p.seconds / r.clean_seconds;
      break;
    }
  }
  return r;
}

OverheadReport overhead_experiment(const Dataset& dataset, const ModelSpec& model_spec,
                                   const CredentialInputs& inputs,
                                   const TrainConfig& config,
                                   const WatermarkParams& params) {
  const auto clean = train_clean(dataset, model_spec, config);
  const auto wm = embed_watermark(dataset, model_spec, inputs, config, params);
  return compute_overhead(clean.history(), wm.model.history(), model_spec.num_classes);
}

nlohmann::json overhead_to_json(const OverheadReport& r) {
  auto curve = [](const std::vector<CurvePoint>& c) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : c) out.push_back({{"seconds", p.seconds}, {"nc", p.nc}});
    return out;
  };
  nlohmann::json j{{"status", to_string(r.status)},
                   {"fraction", r.fraction},
                   {"clean_final_nc", r.clean_final_nc},
                   {"target_nc", r.target_nc},
                   {"clean_seconds", r.clean_seconds},
                   {"clean_curve", curve(r.clean_curve)},
                   {"wm_curve", curve(r.wm_curve)}};
  j["wm_seconds_to_target"] =
      r.wm_seconds_to_target ? nlohmann::json(*r.wm_seconds_to_target) : nlohmann::json();
  j["time_ratio"] = r.time_ratio ? nlohmann::json(*r.time_ratio) : nlohmann::json();
  return j;
}

std::string git_blob_hash(std::span<const std::uint8_t> content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, header.data(), header.size());
  EVP_DigestUpdate(ctx, content.data(), content.size());
  std::uint8_t md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  return to_hex(std::span<const std::uint8_t>(md, len));
}

std::string git_blob_hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return git_blob_hash(bytes);
}

nlohmann::json make_manifest(const nlohmann::json& config, const ModelHandle& model,
                             const std::filesystem::path& model_file,
                             const OwnershipCredential& credential) {
  return {{"config", config},
          {"model_file", model_file.filename().string()},
          {"model_blob_sha1", git_blob_hash_file(model_file)},
          {"weights_sha256", model.weights_digest()},
          {"owner_id", credential.verifier.owner_id()},
          {"timestamp", credential.verifier.timestamp()},
          {"key_id", credential.public_key.key_id()},
          {"parameter_count", model.network().parameter_count()},
          {"history", history_to_json(model.history())}};
}

}  // namespace nullwm
