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

#include "nullwm/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "nullwm/error.hpp"
#include "nullwm/rng.hpp"

namespace nullwm {

LabeledImages LabeledImages::select(std::span<const std::size_t> indices) const {
  LabeledImages out;
  out.shape = shape;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(image(i), labels[i]);
  return out;
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv(kDataDirEnv); env && *env) return env;
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) {
    return std::filesystem::path(xdg) / "nullwm";
  }
  if (const char* home = std::getenv("HOME"); home && *home) {
    return std::filesystem::path(home) / ".cache" / "nullwm";
  }
  return std::filesystem::path(".nullwm-data");
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw IngestionError("truncated IDX header in " + path.string());
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | b[3];
}

std::ifstream open_idx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IngestionError(
        "cannot open " + path.string() +
        "; fetch the MNIST IDX files with tools/fetch_mnist.sh or point " +
        kDataDirEnv + " (or --data-dir) at a directory containing mnist/");
  }
  return in;
}

}  // namespace

LabeledImages read_idx(const std::filesystem::path& images,
                       const std::filesystem::path& labels) {
  auto img = open_idx(images);
  auto lbl = open_idx(labels);
  if (read_be32(img, images) != 0x00000803) {
    throw IngestionError("bad image magic in " + images.string());
  }
  if (read_be32(lbl, labels) != 0x00000801) {
    throw IngestionError("bad label magic in " + labels.string());
  }
  const std::uint32_t count = read_be32(img, images);
  const std::uint32_t rows = read_be32(img, images);
  const std::uint32_t cols = read_be32(img, images);
  if (read_be32(lbl, labels) != count) {
    throw IngestionError("image/label count mismatch between " +
                         images.string() + " and " + labels.string());
  }
  LabeledImages out;
  out.shape = {static_cast<int>(rows), static_cast<int>(cols), 1};
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> raw(pixels * count);
  if (!img.read(reinterpret_cast<char*>(raw.data()),
                static_cast<std::streamsize>(raw.size()))) {
    throw IngestionError("truncated image data in " + images.string());
  }
  std::vector<unsigned char> raw_labels(count);
  if (!lbl.read(reinterpret_cast<char*>(raw_labels.data()), count)) {
    throw IngestionError("truncated label data in " + labels.string());
  }
  out.inputs.resize(raw.size());
  std::transform(raw.begin(), raw.end(), out.inputs.begin(),
                 [](unsigned char v) { return static_cast<float>(v) / 255.0f; });
  out.labels.assign(raw_labels.begin(), raw_labels.end());
  return out;
}

LabeledImages subsample(const LabeledImages& data, std::size_t n,
                        std::uint64_t seed) {
  if (n >= data.size()) return data;
  Rng rng(seed);
  auto idx = rng.sample_without_replacement(data.size(), n);
  return data.select(idx);
}

namespace {

struct Stroke {
  double r0, c0, r1, c1;
};

constexpr int kSide = 28;
constexpr int kStrokesPerClass = 3;

double segment_distance2(double r, double c, const Stroke& s) {
  const double dr = s.r1 - s.r0;
  const double dc = s.c1 - s.c0;
  const double len2 = dr * dr + dc * dc;
  double t = len2 > 0 ? ((r - s.r0) * dr + (c - s.c0) * dc) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double pr = s.r0 + t * dr - r;
  const double pc = s.c0 + t * dc - c;
  return pr * pr + pc * pc;
}

std::vector<std::array<Stroke, kStrokesPerClass>> make_prototypes(
    int num_classes, std::uint64_t family) {
  Rng rng(derive_seed(family, 0x70726f74));
  std::vector<std::array<Stroke, kStrokesPerClass>> protos(
      static_cast<std::size_t>(num_classes));
  for (auto& strokes : protos) {
    for (auto& s : strokes) {
      s = {rng.uniform(5, 22), rng.uniform(5, 22), rng.uniform(5, 22),
           rng.uniform(5, 22)};
    }
  }
  return protos;
}

LabeledImages render_split(
    const std::vector<std::array<Stroke, kStrokesPerClass>>& protos,
    std::size_t count, Rng& rng) {
  const int num_classes = static_cast<int>(protos.size());
  LabeledImages out;
  out.shape = {kSide, kSide, 1};
  out.inputs.assign(count * out.shape.size(), 0.0f);
  out.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.labels[i] = static_cast<int>(i % static_cast<std::size_t>(num_classes));
  }
  rng.shuffle(out.labels);

  constexpr double kWidth2 = 2.0 * 1.1 * 1.1;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& proto = protos[static_cast<std::size_t>(out.labels[i])];
    const double shift_r = static_cast<double>(rng.below(5)) - 2.0;
    const double shift_c = static_cast<double>(rng.below(5)) - 2.0;
    const double gain = rng.uniform(0.7, 1.0);
    std::array<Stroke, kStrokesPerClass> strokes{};
    for (int k = 0; k < kStrokesPerClass; ++k) {
      const auto& s = proto[static_cast<std::size_t>(k)];
      strokes[static_cast<std::size_t>(k)] = {
          s.r0 + shift_r + rng.uniform(-1, 1), s.c0 + shift_c + rng.uniform(-1, 1),
          s.r1 + shift_r + rng.uniform(-1, 1), s.c1 + shift_c + rng.uniform(-1, 1)};
    }
    auto img = out.image(i);
    for (int r = 0; r < kSide; ++r) {
      for (int c = 0; c < kSide; ++c) {
        double d2 = 1e9;
        for (const auto& s : strokes) d2 = std::min(d2, segment_distance2(r, c, s));
        double v = gain * std::exp(-d2 / kWidth2) + 0.05 * rng.normal();
        img[static_cast<std::size_t>(r) * kSide + c] =
            static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

}  // namespace

Dataset make_synthetic(const SyntheticOptions& options) {
  if (options.num_classes < 2) throw ValidationError("synthetic: need >= 2 classes");
  const auto protos = make_prototypes(options.num_classes, options.family);
  Rng train_rng(derive_seed(options.seed, 1));
  Rng test_rng(derive_seed(options.seed, 2));
  Dataset ds;
  ds.name = "synthetic";
  ds.num_classes = options.num_classes;
  ds.train = render_split(protos, options.train_size, train_rng);
  ds.test = render_split(protos, options.test_size, test_rng);
  return ds;
}

Dataset load_dataset(const std::string& name, const LoadOptions& options) {
  Dataset ds;
  if (name == "mnist") {
    const auto dir = options.data_dir.value_or(default_data_dir()) / "mnist";
    ds.name = "mnist";
    ds.num_classes = 10;
    ds.train = read_idx(dir / "train-images-idx3-ubyte",
                        dir / "train-labels-idx1-ubyte");
    ds.test = read_idx(dir / "t10k-images-idx3-ubyte",
                       dir / "t10k-labels-idx1-ubyte");
  } else if (name == "synthetic") {
    ds = make_synthetic({.num_classes = 10, .family = 0, .seed = options.seed});
  } else if (name == "synthetic5") {
    ds = make_synthetic({.num_classes = 5, .family = 5, .seed = options.seed});
    ds.name = "synthetic5";
  } else {
    throw ValidationError("unknown dataset '" + name +
                          "' (expected mnist, synthetic or synthetic5)");
  }
  if (options.limit) {
    ds.train = subsample(ds.train, *options.limit, derive_seed(options.seed, 11));
  }
  if (options.test_limit) {
    ds.test = subsample(ds.test, *options.test_limit, derive_seed(options.seed, 12));
  }
  return ds;
}

}  // namespace nullwm
