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

#include "nullwm/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "nullwm/error.hpp"
#include "nullwm/rng.hpp"

namespace nullwm {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using ConstRowVec = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>;

// Inference is chunked so im2col buffers stay bounded.
constexpr std::size_t kChunk = 256;

template <typename T>
void im2col(const T* in, std::size_t count, const ImageShape& s, int k,
            int out_h, int out_w, T* col) {
  const std::size_t row_len = static_cast<std::size_t>(k) * s.channels;
  const std::size_t kk = row_len * k;
  for (std::size_t n = 0; n < count; ++n) {
    const T* img = in + n * s.size();
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        T* dst = col + ((n * out_h + oy) * out_w + ox) * kk;
        for (int ky = 0; ky < k; ++ky) {
          const T* src = img + s.offset(oy + ky, ox);
          std::copy(src, src + row_len, dst + ky * row_len);
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, std::size_t count, const ImageShape& s, int k,
                int out_h, int out_w, T* out) {
  const std::size_t row_len = static_cast<std::size_t>(k) * s.channels;
  const std::size_t kk = row_len * k;
  for (std::size_t n = 0; n < count; ++n) {
    T* img = out + n * s.size();
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        const T* src = col + ((n * out_h + oy) * out_w + ox) * kk;
        for (int ky = 0; ky < k; ++ky) {
          T* dst = img + s.offset(oy + ky, ox);
          const T* row = src + ky * row_len;
          for (std::size_t j = 0; j < row_len; ++j) dst[j] += row[j];
        }
      }
    }
  }
}

// Plain loop: Eigen's vectorized reductions peel on buffer alignment, which
// makes the summation order (and the result) vary between runs.
template <typename T>
void column_sums(const T* m, std::size_t rows, std::size_t cols, T* out) {
  std::fill(out, out + cols, T(0));
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = m + r * cols;
    for (std::size_t c = 0; c < cols; ++c) out[c] += row[c];
  }
}

template <typename T>
void softmax_rows(std::vector<T>& v, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    T* row = v.data() + r * cols;
    const T m = *std::max_element(row, row + cols);
    T sum = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      row[c] = std::exp(row[c] - m);
      sum += row[c];
    }
    for (std::size_t c = 0; c < cols; ++c) row[c] /= sum;
  }
}

}  // namespace

template <typename T>
struct BasicNetwork<T>::Tape {
  // im2col matrix for conv layers, flattened input for dense layers.
  std::vector<std::vector<T>> input;
  // Post-activation output (pre-softmax logits for the last layer).
  std::vector<std::vector<T>> output;
  std::vector<std::vector<std::uint32_t>> argmax;
};

template <typename T>
BasicNetwork<T>::BasicNetwork(ModelSpec spec) : spec_(std::move(spec)) {
  shapes_ = spec_.shapes();
  kernel_of_layer_.assign(spec_.layers.size(), std::nullopt);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto& l = spec_.layers[i];
    const auto& sh = shapes_[i];
    if (!l.has_weights()) continue;
    kernel_of_layer_[i] = params_.size();
    Param kernel{l.name + ".kernel", {}, {}, {}};
    if (l.kind == LayerKind::kConv) {
      kernel.shape = {l.kernel, l.kernel, sh.input.channels, l.units};
    } else {
      kernel.shape = {static_cast<int>(sh.input.size()), l.units};
    }
    std::size_t n = 1;
    for (int d : kernel.shape) n *= static_cast<std::size_t>(d);
    kernel.values.assign(n, T(0));
    params_.push_back(std::move(kernel));
    params_.push_back(Param{l.name + ".bias", {l.units},
                            std::vector<T>(static_cast<std::size_t>(l.units), T(0)),
                            {}});
  }
}

template <typename T>
void BasicNetwork<T>::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto idx = kernel_of_layer_[i];
    if (!idx) continue;
    const auto& l = spec_.layers[i];
    double fan_in, fan_out;
    if (l.kind == LayerKind::kConv) {
      const double area = static_cast<double>(l.kernel) * l.kernel;
      fan_in = area * shapes_[i].input.channels;
      fan_out = area * l.units;
    } else {
      fan_in = static_cast<double>(shapes_[i].input.size());
      fan_out = l.units;
    }
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& w : params_[*idx].values) w = static_cast<T>(rng.uniform(-limit, limit));
    std::fill(params_[*idx + 1].values.begin(), params_[*idx + 1].values.end(), T(0));
    params_[*idx].mask.clear();
    params_[*idx + 1].mask.clear();
  }
}

template <typename T>
std::size_t BasicNetwork<T>::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

template <typename T>
std::optional<std::size_t> BasicNetwork<T>::kernel_index(std::size_t layer) const {
  if (layer >= kernel_of_layer_.size()) return std::nullopt;
  return kernel_of_layer_[layer];
}

template <typename T>
std::optional<std::size_t> BasicNetwork<T>::layer_index(const std::string& name) const {
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    if (spec_.layers[i].name == name) return i;
  }
  return std::nullopt;
}

template <typename T>
void BasicNetwork<T>::run(std::span<const float> inputs, std::size_t count,
                          std::size_t upto, std::vector<T>& out,
                          Tape* tape) const {
  if (inputs.size() != count * spec_.input.size()) {
    throw DimensionError("expected " + std::to_string(count) + " inputs of shape " +
                         spec_.input.to_string() + ", got " +
                         std::to_string(inputs.size()) + " values");
  }
  std::vector<T> cur(inputs.begin(), inputs.end());
  std::vector<T> next;
  if (tape) {
    tape->input.assign(upto + 1, {});
    tape->output.assign(upto + 1, {});
    tape->argmax.assign(upto + 1, {});
  }
  for (std::size_t i = 0; i <= upto; ++i) {
    const auto& l = spec_.layers[i];
    const auto& sh = shapes_[i];
    switch (l.kind) {
      case LayerKind::kConv: {
        const int k = l.kernel;
        const std::size_t kk = static_cast<std::size_t>(k) * k * sh.input.channels;
        const std::size_t rows =
            count * static_cast<std::size_t>(sh.output.height) * sh.output.width;
        const auto f = static_cast<std::size_t>(l.units);
        std::vector<T> col(rows * kk);
        im2col(cur.data(), count, sh.input, k, sh.output.height, sh.output.width,
               col.data());
        const auto& w = params_[*kernel_of_layer_[i]].values;
        const auto& b = params_[*kernel_of_layer_[i] + 1].values;
        next.resize(rows * f);
        MatMap<T> y(next.data(), rows, f);
        y.noalias() = ConstMatMap<T>(col.data(), rows, kk) *
                      ConstMatMap<T>(w.data(), kk, f);
        y.rowwise() += ConstRowVec<T>(b.data(), f);
        if (tape) tape->input[i] = std::move(col);
        break;
      }
      case LayerKind::kMaxPool: {
        const auto& in = sh.input;
        const auto& os = sh.output;
        const int win = l.kernel;
        const auto ch = static_cast<std::size_t>(os.channels);
        next.resize(count * os.size());
        std::vector<std::uint32_t> arg(tape ? next.size() : 0);
        for (std::size_t n = 0; n < count; ++n) {
          const T* src = cur.data() + n * in.size();
          const std::size_t base = n * in.size();
          for (int oy = 0; oy < os.height; ++oy) {
            for (int ox = 0; ox < os.width; ++ox) {
              const std::size_t o = n * os.size() + os.offset(oy, ox, 0);
              T* dst = next.data() + o;
              std::uint32_t* a = tape ? arg.data() + o : nullptr;
              for (int dy = 0; dy < win; ++dy) {
                for (int dx = 0; dx < win; ++dx) {
                  const std::size_t at = in.offset(oy * win + dy, ox * win + dx, 0);
                  const T* s = src + at;
                  if (dy == 0 && dx == 0) {
                    std::copy(s, s + ch, dst);
                    if (a) {
                      for (std::size_t c = 0; c < ch; ++c) {
                        a[c] = static_cast<std::uint32_t>(base + at + c);
                      }
                    }
                    continue;
                  }
                  for (std::size_t c = 0; c < ch; ++c) {
                    if (s[c] > dst[c]) {
                      dst[c] = s[c];
                      if (a) a[c] = static_cast<std::uint32_t>(base + at + c);
                    }
                  }
                }
              }
            }
          }
        }
        if (tape) tape->argmax[i] = std::move(arg);
        break;
      }
      case LayerKind::kDense: {
        const std::size_t d = sh.input.size();
        const auto u = static_cast<std::size_t>(l.units);
        const auto& w = params_[*kernel_of_layer_[i]].values;
        const auto& b = params_[*kernel_of_layer_[i] + 1].values;
        next.resize(count * u);
        MatMap<T> y(next.data(), count, u);
        y.noalias() = ConstMatMap<T>(cur.data(), count, d) *
                      ConstMatMap<T>(w.data(), d, u);
        y.rowwise() += ConstRowVec<T>(b.data(), u);
        if (tape) tape->input[i] = cur;
        break;
      }
    }
    switch (l.activation) {
      case Activation::kNone:
        if (tape) tape->output[i] = next;
        break;
      case Activation::kRelu:
        for (auto& v : next) v = v > T(0) ? v : T(0);
        if (tape) tape->output[i] = next;
        break;
      case Activation::kSoftmax:
        if (tape) tape->output[i] = next;
        softmax_rows(next, count, static_cast<std::size_t>(l.units));
        break;
    }
    cur.swap(next);
  }
  out = std::move(cur);
}

template <typename T>
std::vector<T> BasicNetwork<T>::forward(std::span<const float> inputs,
                                        std::size_t count) const {
  const std::size_t in_size = spec_.input.size();
  const auto y = static_cast<std::size_t>(spec_.num_classes);
  if (inputs.size() != count * in_size) {
    throw DimensionError("forward: input size does not match " +
                         spec_.input.to_string());
  }
  std::vector<T> out(count * y);
  std::vector<T> chunk_out;
  for (std::size_t start = 0; start < count; start += kChunk) {
    const std::size_t n = std::min(kChunk, count - start);
    run(inputs.subspan(start * in_size, n * in_size), n, spec_.layers.size() - 1,
        chunk_out, nullptr);
    std::copy(chunk_out.begin(), chunk_out.end(), out.begin() + start * y);
  }
  return out;
}

template <typename T>
std::vector<T> BasicNetwork<T>::activations(std::span<const float> inputs,
                                            std::size_t count,
                                            std::size_t layer) const {
  if (layer >= spec_.layers.size()) throw ValidationError("layer out of range");
  const std::size_t in_size = spec_.input.size();
  const std::size_t out_size = shapes_[layer].output.size();
  std::vector<T> out(count * out_size);
  std::vector<T> chunk_out;
  for (std::size_t start = 0; start < count; start += kChunk) {
    const std::size_t n = std::min(kChunk, count - start);
    run(inputs.subspan(start * in_size, n * in_size), n, layer, chunk_out, nullptr);
    std::copy(chunk_out.begin(), chunk_out.end(), out.begin() + start * out_size);
  }
  return out;
}

namespace {

template <typename T>
T cross_entropy(const std::vector<T>& logits, std::span<const int> labels,
                std::size_t classes) {
  T total = 0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const T* z = logits.data() + n * classes;
    const T m = *std::max_element(z, z + classes);
    T sum = 0;
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(z[c] - m);
    total += m + std::log(sum) - z[static_cast<std::size_t>(labels[n])];
  }
  return total / static_cast<T>(labels.size());
}

}  // namespace

template <typename T>
T BasicNetwork<T>::loss(std::span<const float> inputs,
                        std::span<const int> labels) const {
  Tape tape;
  std::vector<T> probs;
  run(inputs, labels.size(), spec_.layers.size() - 1, probs, &tape);
  return cross_entropy(tape.output.back(), labels,
                       static_cast<std::size_t>(spec_.num_classes));
}

template <typename T>
T BasicNetwork<T>::loss_and_gradient(std::span<const float> inputs,
                                     std::span<const int> labels,
                                     std::vector<std::vector<T>>& grads) const {
  const std::size_t count = labels.size();
  if (count == 0) throw ValidationError("empty batch");
  const auto classes = static_cast<std::size_t>(spec_.num_classes);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw ValidationError("label " + std::to_string(y) + " out of range");
    }
  }
  Tape tape;
  std::vector<T> delta;
  const std::size_t last = spec_.layers.size() - 1;
  run(inputs, count, last, delta, &tape);
  const T loss_value = cross_entropy(tape.output.back(), labels, classes);

  const T scale = T(1) / static_cast<T>(count);
  for (std::size_t n = 0; n < count; ++n) {
    delta[n * classes + static_cast<std::size_t>(labels[n])] -= T(1);
  }
  for (auto& v : delta) v *= scale;

  grads.resize(params_.size());
  for (std::size_t p = 0; p < params_.size(); ++p) {
    grads[p].assign(params_[p].size(), T(0));
  }

  std::vector<T> dx;
  for (std::size_t ii = last + 1; ii-- > 0;) {
    const auto& l = spec_.layers[ii];
    const auto& sh = shapes_[ii];
    const bool need_dx = ii > 0;
    switch (l.kind) {
      case LayerKind::kConv: {
        const std::size_t kk =
            static_cast<std::size_t>(l.kernel) * l.kernel * sh.input.channels;
        const std::size_t rows =
            count * static_cast<std::size_t>(sh.output.height) * sh.output.width;
        const auto f = static_cast<std::size_t>(l.units);
        const std::size_t ki = *kernel_of_layer_[ii];
        ConstMatMap<T> dz(delta.data(), rows, f);
        ConstMatMap<T> col(tape.input[ii].data(), rows, kk);
        MatMap<T>(grads[ki].data(), kk, f).noalias() = col.transpose() * dz;
        column_sums(delta.data(), rows, f, grads[ki + 1].data());
        if (need_dx) {
          RowMat<T> dcol(rows, kk);
          dcol.noalias() =
              dz * ConstMatMap<T>(params_[ki].values.data(), kk, f).transpose();
          dx.assign(count * sh.input.size(), T(0));
          col2im_add(dcol.data(), count, sh.input, l.kernel, sh.output.height,
                     sh.output.width, dx.data());
        }
        break;
      }
      case LayerKind::kMaxPool: {
        dx.assign(count * sh.input.size(), T(0));
        const auto& arg = tape.argmax[ii];
        for (std::size_t o = 0; o < arg.size(); ++o) dx[arg[o]] += delta[o];
        break;
      }
      case LayerKind::kDense: {
        const std::size_t d = sh.input.size();
        const auto u = static_cast<std::size_t>(l.units);
        const std::size_t ki = *kernel_of_layer_[ii];
        ConstMatMap<T> dz(delta.data(), count, u);
        ConstMatMap<T> x(tape.input[ii].data(), count, d);
        MatMap<T>(grads[ki].data(), d, u).noalias() = x.transpose() * dz;
        column_sums(delta.data(), count, u, grads[ki + 1].data());
        if (need_dx) {
          dx.resize(count * d);
          MatMap<T>(dx.data(), count, d).noalias() =
              dz * ConstMatMap<T>(params_[ki].values.data(), d, u).transpose();
        }
        break;
      }
    }
    if (!need_dx) break;
    if (spec_.layers[ii - 1].activation == Activation::kRelu) {
      const auto& act = tape.output[ii - 1];
      for (std::size_t j = 0; j < dx.size(); ++j) {
        if (!(act[j] > T(0))) dx[j] = T(0);
      }
    }
    delta.swap(dx);
  }

  for (std::size_t p = 0; p < params_.size(); ++p) {
    const auto& mask = params_[p].mask;
    if (mask.empty()) continue;
    for (std::size_t j = 0; j < mask.size(); ++j) grads[p][j] *= mask[j];
  }
  return loss_value;
}

template <typename T>
void BasicNetwork<T>::apply_masks() {
  for (auto& p : params_) {
    if (p.mask.empty()) continue;
    for (std::size_t j = 0; j < p.values.size(); ++j) p.values[j] *= p.mask[j];
  }
}

template <typename T>
BasicNetwork<T> BasicNetwork<T>::with_new_head(int num_classes,
                                               std::uint64_t seed) const {
  ModelSpec s = spec_;
  s.num_classes = num_classes;
  s.layers.back().units = num_classes;
  BasicNetwork<T> out(s);
  const std::size_t head = *kernel_of_layer_.back();
  for (std::size_t p = 0; p < head; ++p) out.params_[p] = params_[p];
  const auto& sh = out.shapes_.back();
  const double limit =
      std::sqrt(6.0 / (static_cast<double>(sh.input.size()) + num_classes));
  Rng rng(seed);
  for (auto& w : out.params_[head].values) w = static_cast<T>(rng.uniform(-limit, limit));
  return out;
}

template class BasicNetwork<float>;
template class BasicNetwork<double>;

}  // namespace nullwm
