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


#include "nullwm/model.hpp"


#include <openssl/evp.h>

#include "nullwm/crypto.hpp"
#include "nullwm/error.hpp"

namespace nullwm {

std::vector<int> argmax_rows(std::span<const float> values, std::size_t cols) {
  const std::size_t rows = cols ? values.size() / cols : 0;
  std::vector<int> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* row = values.data() + r * cols;
    std::size_t best = 0;
    for (std::size_t c = 1; c < cols; ++c) {
      if (row[c] > row[best]) best = c;
    }
    out[r] = static_cast<int>(best);
  }
  return out;
}

std::vector<float> ModelHandle::predict_proba(std::span<const float> inputs,
                                              std::size_t count) const {
  return network_.forward(inputs, count);
}

std::vector<int> ModelHandle::predict(std::span<const float> inputs,
                                      std::size_t count) const {
  return argmax_rows(predict_proba(inputs, count),
                     static_cast<std::size_t>(num_classes()));
}

std::string ModelHandle::weights_digest() const {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  for (const auto& p : network_.params()) {
    EVP_DigestUpdate(ctx, p.name.data(), p.name.size() + 1);
    for (int d : p.shape) {
      const auto v = static_cast<std::uint32_t>(d);
      EVP_DigestUpdate(ctx, &v, sizeof v);
    }
    EVP_DigestUpdate(ctx, p.values.data(), p.values.size() * sizeof(float));
    const std::uint8_t has_mask = p.mask.empty() ? 0 : 1;
    EVP_DigestUpdate(ctx, &has_mask, 1);
    if (has_mask) EVP_DigestUpdate(ctx, p.mask.data(), p.mask.size() * sizeof(float));
  }
  Digest d{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, d.data(), &len);
  EVP_MD_CTX_free(ctx);
  return to_hex(d);
}

ModelHandle build_model(const ModelSpec& spec, std::uint64_t seed) {
  Network net(spec);
  net.initialize(seed);
  return ModelHandle(std::move(net));
}

double evaluate_nc(const Classifier& model, const LabeledImages& data) {
  if (data.empty()) throw ValidationError("evaluate_nc: empty dataset");
  if (!(data.shape == model.input_shape())) {
    throw DimensionError("evaluate_nc: data shape " + data.shape.to_string() +
                         " does not match model input " +
                         model.input_shape().to_string());
  }
  const auto pred = model.predict(data);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == data.labels[i];
  return static_cast<double>(hit) / static_cast<double>(data.size());
}

}  // namespace nullwm
