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


#include "nullwm/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include <nlohmann/json.hpp>

#include "nullwm/error.hpp"

namespace nullwm {

static_assert(std::endian::native == std::endian::little,
              "model files are written in native little-endian order");

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace

nlohmann::json history_to_json(const TrainingHistory& history) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : history.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"nc", e.nc},
                      {"loss", e.loss},
                      {"seconds", e.seconds},
                      {"learning_rate", e.learning_rate},
                      {"clipped_steps", e.clipped_steps},
                      {"metrics", e.metrics}});
  }
  return {{"steps", history.steps},
          {"last_learning_rate", history.last_learning_rate},
          {"epochs", std::move(epochs)}};
}

TrainingHistory history_from_json(const nlohmann::json& j) {
  TrainingHistory h;
  h.steps = j.value("steps", std::uint64_t{0});
  h.last_learning_rate = j.value("last_learning_rate", 0.0);
  for (const auto& je : j.value("epochs", nlohmann::json::array())) {
    EpochRecord e;
    e.epoch = je.at("epoch").get<int>();
    e.nc = je.at("nc").get<double>();
    e.loss = je.at("loss").get<double>();
    e.seconds = je.at("seconds").get<double>();
    e.learning_rate = je.value("learning_rate", 0.0);
    e.clipped_steps = je.value("clipped_steps", std::size_t{0});
    e.metrics = je.value("metrics", std::map<std::string, double>{});
    h.epochs.push_back(std::move(e));
  }
  return h;
}

std::vector<std::uint8_t> serialize_model(const ModelHandle& model) {
  nlohmann::json blobs = nlohmann::json::array();
  std::vector<const std::vector<float>*> data;
  std::uint64_t offset = 0;
  auto add = [&](const std::string& name, const std::vector<int>& shape,
                 const std::vector<float>& values) {
    blobs.push_back({{"name", name},
                     {"shape", shape},
                     {"offset", offset},
                     {"count", values.size()}});
    data.push_back(&values);
    offset += values.size() * sizeof(float);
  };
  for (const auto& p : model.network().params()) {
    add(p.name, p.shape, p.values);
    if (!p.mask.empty()) add(p.name + ".mask", p.shape, p.mask);
  }
  const nlohmann::json header{{"spec", spec_to_json(model.spec())},
                              {"history", history_to_json(model.history())},
                              {"blobs", std::move(blobs)}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kModelMagic), std::end(kModelMagic));
  put_u32(out, kModelFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  const std::size_t base = out.size();
  out.resize(base + offset);
  std::size_t at = base;
  for (const auto* v : data) {
    std::memcpy(out.data() + at, v->data(), v->size() * sizeof(float));
    at += v->size() * sizeof(float);
  }
  return out;
}

ModelHandle deserialize_model(std::span<const std::uint8_t> bytes) {
  constexpr std::size_t kPrefix = sizeof(kModelMagic) + 8;
  if (bytes.size() < kPrefix) throw FormatError("model file truncated (no header)");
  if (std::memcmp(bytes.data(), kModelMagic, sizeof(kModelMagic)) != 0) {
    throw FormatError("not a model file (bad magic)");
  }
  const std::uint32_t version = get_u32(bytes.data() + 8);
  if (version != kModelFormatVersion) {
    throw UnsupportedVersionError("unsupported model format version " +
                                  std::to_string(version) + " (expected " +
                                  std::to_string(kModelFormatVersion) + ")");
  }
  const std::uint32_t header_len = get_u32(bytes.data() + 12);
  if (bytes.size() < kPrefix + header_len) {
    throw FormatError("model file truncated (header)");
  }
  const auto data = bytes.subspan(kPrefix + header_len);
  try {
    const auto header = nlohmann::json::parse(bytes.begin() + kPrefix,
                                              bytes.begin() + kPrefix + header_len);
    ModelHandle model(Network(spec_from_json(header.at("spec"))));
    model.history() = history_from_json(header.at("history"));

    std::map<std::string, std::vector<float>> blobs;
    for (const auto& jb : header.at("blobs")) {
      const auto off = jb.at("offset").get<std::uint64_t>();
      const auto count = jb.at("count").get<std::uint64_t>();
      if (off > data.size() || count > (data.size() - off) / sizeof(float)) {
        throw FormatError("model file truncated (blob '" +
                          jb.at("name").get<std::string>() + "')");
      }
      std::vector<float> v(count);
      std::memcpy(v.data(), data.data() + off, count * sizeof(float));
      blobs[jb.at("name").get<std::string>()] = std::move(v);
    }
    for (auto& p : model.network().params()) {
      auto it = blobs.find(p.name);
      if (it == blobs.end()) throw FormatError("missing weights for '" + p.name + "'");
      if (it->second.size() != p.values.size()) {
        throw FormatError("weights for '" + p.name + "' have the wrong size");
      }
      p.values = std::move(it->second);
      auto mit = blobs.find(p.name + ".mask");
      if (mit != blobs.end()) {
        if (mit->second.size() != p.values.size()) {
          throw FormatError("mask for '" + p.name + "' has the wrong size");
        }
        p.mask = std::move(mit->second);
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model header: ") + e.what());
  } catch (const SpecError& e) {
    throw FormatError(std::string("invalid model spec: ") + e.what());
  }
}

void save_model(const ModelHandle& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

ModelHandle load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace nullwm
