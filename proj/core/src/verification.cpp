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


#include "nullwm/verification.hpp"

#include <chrono>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "nullwm/error.hpp"
#include "nullwm/filter.hpp"
#include "nullwm/rng.hpp"

namespace nullwm {

std::vector<std::size_t> sample_indices(std::size_t n,
                                        std::optional<std::size_t> sample_size,
                                        std::uint64_t seed) {
  std::vector<std::size_t> out;
  if (!sample_size || *sample_size >= n) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = i;
    return out;
  }
  Rng rng(seed);
  out = rng.sample_without_replacement(n, *sample_size);
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

void check_inputs(const Classifier& model, const WatermarkSpec& spec,
                  const LabeledImages& data) {
  if (data.empty()) throw ValidationError("watermark measurement on an empty set");
  if (!(data.shape == model.input_shape())) {
    throw DimensionError("data shape " + data.shape.to_string() +
                         " does not match model input " +
                         model.input_shape().to_string());
  }
  if (spec.pattern.height() != data.shape.height ||
      spec.pattern.width() != data.shape.width) {
    throw DimensionError("watermark pattern does not match the input size");
  }
}

LabeledImages filtered(const LabeledImages& base, const FilterPattern& p, float lambda) {
  LabeledImages out = base;
  for (std::size_t i = 0; i < out.size(); ++i) {
    apply_inplace(out.image(i), out.shape, p, lambda);
  }
  return out;
}

// Core of measure_phi() with the sampled set and its clean predictions given.
PhiScores score(const Classifier& model, const WatermarkSpec& spec,
                const LabeledImages& sample, const std::vector<int>& clean_pred) {
  PhiScores s;
  s.num_samples = sample.size();
  const auto true_pred =
      model.predict(filtered(sample, invert(spec.pattern), spec.extreme_value));
  const auto null_pred = model.predict(filtered(sample, spec.pattern, spec.extreme_value));
  std::size_t t = 0, nl = 0, c = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const int y = sample.labels[i];
    t += true_pred[i] == spec.target_label;
    nl += clean_pred[i] == y && null_pred[i] == y;
    c += clean_pred[i] == y;
  }
  const auto n = static_cast<double>(sample.size());
  s.phi_true = static_cast<double>(t) / n;
  s.phi_null = static_cast<double>(nl) / n;
  s.nc = static_cast<double>(c) / n;
  return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

PhiScores measure_phi(const Classifier& model, const WatermarkSpec& spec,
                      const LabeledImages& data, std::optional<std::size_t> sample_size,
                      std::uint64_t seed) {
  check_inputs(model, spec, data);
  const auto idx = sample_indices(data.size(), sample_size, seed);
  const LabeledImages sample = data.select(idx);
  return score(model, spec, sample, model.predict(sample));
}

double phi_true(const Classifier& model, const WatermarkSpec& spec,
                const LabeledImages& data, std::optional<std::size_t> sample_size,
                std::uint64_t seed) {
  check_inputs(model, spec, data);
  const auto idx = sample_indices(data.size(), sample_size, seed);
  const LabeledImages sample = data.select(idx);
  const auto pred =
      model.predict(filtered(sample, invert(spec.pattern), spec.extreme_value));
  std::size_t hit = 0;
  for (int p : pred) hit += p == spec.target_label;
  return static_cast<double>(hit) / static_cast<double>(sample.size());
}

double phi_null(const Classifier& model, const WatermarkSpec& spec,
                const LabeledImages& data, std::optional<std::size_t> sample_size,
                std::uint64_t seed) {
  return measure_phi(model, spec, data, sample_size, seed).phi_null;
}

WatermarkSpec derive_spec(const OwnershipCredential& credential,
                          const Classifier& model, int block_size,
                          float extreme_value) {
  TransformParams params;
  params.height = model.input_shape().height;
  params.width = model.input_shape().width;
  params.num_classes = model.num_classes();
  params.block_size = block_size;
  params.extreme_value = extreme_value;
  return transform(credential.signature, params);
}

VerificationReport verify_spec(const Classifier& model, const WatermarkSpec& spec,
                               const LabeledImages& data, const VerifyOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  VerificationReport r;
  r.signature_valid = true;
  r.threshold = options.threshold;
  const auto s = measure_phi(model, spec, data, options.sample_size, options.seed);
  r.phi_true = s.phi_true;
  r.phi_null = s.phi_null;
  r.wm = s.wm();
  r.num_samples = s.num_samples;
  r.pass = r.wm > r.threshold;
  r.runtime_seconds = seconds_since(t0);
  return r;
}

VerificationReport verify_watermark(const Classifier& model,
                                    const OwnershipCredential& credential,
                                    const LabeledImages& data,
                                    const VerifyOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  VerificationReport r;
  r.threshold = options.threshold;
  r.owner_id = credential.verifier.owner_id();
  if (!credential.public_key.empty()) r.key_id = credential.public_key.key_id();
  if (!credential.signature_valid()) {
    r.runtime_seconds = seconds_since(t0);
    return r;
  }
  const auto spec =
      derive_spec(credential, model, options.block_size, options.extreme_value);
  VerificationReport inner = verify_spec(model, spec, data, options);
  inner.owner_id = r.owner_id;
  inner.key_id = r.key_id;
  inner.runtime_seconds = seconds_since(t0);
  return inner;
}

std::string VerificationReport::summary() const {
  char buf[256];
  if (!signature_valid) {
    std::snprintf(buf, sizeof buf, "FAIL signature invalid (owner=%s)", owner_id.c_str());
    return buf;
  }
  std::snprintf(buf, sizeof buf,
                "%s wm=%.4f (true=%.4f null=%.4f) threshold=%.2f samples=%zu "
                "time=%.2fs owner=%s",
                pass ? "PASS" : "FAIL", wm, phi_true, phi_null, threshold, num_samples,
                runtime_seconds, owner_id.c_str());
  return buf;
}

nlohmann::json report_to_json(const VerificationReport& r) {
  return {{"signature_valid", r.signature_valid},
          {"phi_true", r.phi_true},
          {"phi_null", r.phi_null},
          {"wm", r.wm},
          {"threshold", r.threshold},
          {"pass", r.pass},
          {"num_samples", r.num_samples},
          {"runtime_seconds", r.runtime_seconds},
          {"owner_id", r.owner_id},
          {"key_id", r.key_id}};
}

OwnershipTestResult non_trivial_ownership_test(
    const Classifier& model, std::size_t num_watermarks, const LabeledImages& data,
    const VerifyOptions& options, const std::optional<OwnershipCredential>& control) {
  if (data.empty()) throw ValidationError("ownership test on an empty set");
  const auto idx = sample_indices(data.size(), options.sample_size, options.seed);
  const LabeledImages sample = data.select(idx);
  const auto clean_pred = model.predict(sample);

  auto run_one = [&](const OwnershipCredential& cred) {
    if (!cred.signature_valid()) return PhiScores{};
    const auto spec =
        derive_spec(cred, model, options.block_size, options.extreme_value);
    return score(model, spec, sample, clean_pred);
  };

  OwnershipTestResult out;
  out.num_watermarks = num_watermarks;
  double match_sum = 0.0;
  for (std::size_t i = 0; i < num_watermarks; ++i) {
    const auto keys = generate_keys(derive_seed(options.seed, 0x4e54 + i));
    const auto cred = make_credential(keys, "random-" + std::to_string(i),
                                      "2000-01-01T00:00:00Z");
    const auto s = run_one(cred);
    match_sum += s.phi_true;
    out.max_wm = std::max(out.max_wm, s.wm());
    if (s.wm() > options.threshold) ++out.passes;
  }
  if (num_watermarks > 0) {
    out.false_positive_rate =
        static_cast<double>(out.passes) / static_cast<double>(num_watermarks);
    out.mean_match_rate = match_sum / static_cast<double>(num_watermarks);
  }
  if (control) out.control_pass = run_one(*control).wm() > options.threshold;
  return out;
}

}  // namespace nullwm
