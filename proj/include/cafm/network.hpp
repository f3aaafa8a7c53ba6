// Copyright 2026 The CaFM Delivery Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Backbone parameters, forward evaluation (with optional modulation),
// reverse-mode gradients and feature capture.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cafm/architecture.hpp"
#include "cafm/media.hpp"
#include "cafm/modulation.hpp"
#include "cafm/ops.hpp"
#include "cafm/tensor.hpp"

namespace cafm {

/// Shared weights W_s. Tensors are stored as [layer.weight, layer.bias] per
/// layer in manifest order.
template <typename T>
struct BackboneParams {
  Architecture arch;
  NamedTensors<T> tensors;

  const BackboneConfig& config() const { return arch.config; }
  const Tensor<T>& weight(int layer) const { return tensors[2 * static_cast<std::size_t>(layer)].tensor; }
  const Tensor<T>& bias(int layer) const { return tensors[2 * static_cast<std::size_t>(layer) + 1].tensor; }

  bool all_finite() const {
    for (const auto& e : tensors)
      if (!e.tensor.all_finite()) return false;
    return true;
  }

  template <typename U>
  BackboneParams<U> cast() const {
    BackboneParams<U> out;
    out.arch = arch;
    for (const auto& e : tensors) out.tensors.add(e.name, e.tensor.template cast<U>());
    return out;
  }

  friend bool operator==(const BackboneParams& a, const BackboneParams& b) {
    return a.arch.config == b.arch.config && a.tensors == b.tensors;
  }
};

/// Zero-filled tensors with the manifest's shapes.
template <typename T>
BackboneParams<T> zero_backbone(const Architecture& arch) {
  BackboneParams<T> p;
  p.arch = arch;
  for (const auto& l : arch.layers) {
    p.tensors.add(l.name + ".weight", Tensor<T>(l.weight_shape()));
    p.tensors.add(l.name + ".bias", Tensor<T>(l.bias_shape()));
  }
  return p;
}

/// Kaiming-uniform fan-in weights with negative slope sqrt(5) (bound
/// 1/sqrt(fan_in), the usual conv default) and zero biases.
template <typename T = float>
BackboneParams<T> build_backbone(const BackboneConfig& config, std::uint64_t seed) {
  auto p = zero_backbone<T>(make_architecture(config));
  Rng rng(seed);
  for (std::size_t l = 0; l < p.arch.layers.size(); ++l) {
    const auto& spec = p.arch.layers[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.in_channels * spec.kernel * spec.kernel));
    for (auto& v : p.tensors[2 * l].tensor.storage()) v = static_cast<T>(rng.uniform(-bound, bound));
  }
  return p;
}

/// Throws a shape error unless every tensor matches the manifest.
template <typename T>
void check_params(const BackboneParams<T>& p) {
  const auto& layers = p.arch.layers;
  if (p.tensors.size() != 2 * layers.size()) fail(ErrorCode::kShape, "backbone tensor count does not match manifest");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& w = p.tensors[2 * l];
    const auto& b = p.tensors[2 * l + 1];
    if (w.name != layers[l].name + ".weight" || w.tensor.shape() != layers[l].weight_shape() ||
        b.name != layers[l].name + ".bias" || b.tensor.shape() != layers[l].bias_shape())
      fail(ErrorCode::kShape, "tensor for layer '" + layers[l].name + "' does not match manifest");
  }
}

template <typename T>
std::size_t count_params(const BackboneParams<T>& p) {
  return p.tensors.numel();
}

/// Values of every graph node from one forward pass.
template <typename T>
struct ForwardTape {
  std::vector<Tensor<T>> values;
  const Tensor<T>& output(const Architecture& arch) const { return values[arch.output]; }
};

template <typename T>
ForwardTape<T> forward_tape(const BackboneParams<T>& params, const CaFMSet<T>* cafm, const Tensor<T>& lr) {
  const auto& arch = params.arch;
  if (lr.ndim() != 3 || lr.dim(0) != 3 || lr.dim(1) < 1 || lr.dim(2) < 1)
    fail(ErrorCode::kInference, "input must be a (3,H,W) tensor, got " + shape_string(lr.shape()));
  if (cafm != nullptr) check_compatible(arch, *cafm);
  const auto s = static_cast<std::size_t>(arch.config.scale);
  ForwardTape<T> tape;
  tape.values.resize(arch.nodes.size());
  for (std::size_t i = 0; i < arch.nodes.size(); ++i) {
    const auto& n = arch.nodes[i];
    auto& out = tape.values[i];
    switch (n.op) {
      case OpKind::kInput:
        out = arch.pre_upscale ? bicubic_resize_chw(lr, lr.dim(1) * s, lr.dim(2) * s) : lr;
        break;
      case OpKind::kConv:
        out = ops::conv2d(tape.values[n.a], params.weight(n.layer), params.bias(n.layer));
        break;
      case OpKind::kModulate:
        if (cafm == nullptr) {
          out = tape.values[n.a];
        } else {
          const auto& e = cafm->entries[arch.layers[n.layer].modulation_index];
          out = ops::depthwise_affine(tape.values[n.a], e.scale, e.bias);
        }
        break;
      case OpKind::kRelu: out = ops::relu(tape.values[n.a]); break;
      case OpKind::kTanh: out = ops::tanh(tape.values[n.a]); break;
      case OpKind::kAdd: {
        const auto& a = tape.values[n.a];
        const auto& b = tape.values[n.b];
        if (a.shape() != b.shape()) fail(ErrorCode::kInference, "residual shape mismatch");
        out = a;
        if (n.b_scale == 1.0) {
          for (std::size_t j = 0; j < out.size(); ++j) out[j] += b[j];
        } else {
          const T bs = static_cast<T>(n.b_scale);
          for (std::size_t j = 0; j < out.size(); ++j) out[j] += bs * b[j];
        }
        break;
      }
      case OpKind::kPixelShuffle: out = ops::pixel_shuffle(tape.values[n.a], n.factor); break;
    }
  }
  return tape;
}

/// g(x; W_s, W_i) for one (3,H,W) input; plain backbone when cafm is null.
/// Output is unclamped.
template <typename T>
Tensor<T> forward(const BackboneParams<T>& params, const CaFMSet<T>* cafm, const Tensor<T>& lr) {
  auto tape = forward_tape(params, cafm, lr);
  return std::move(tape.values[params.arch.output]);
}

template <typename T>
Tensor<T> forward(const BackboneParams<T>& params, const std::optional<CaFMSet<T>>& cafm, const Tensor<T>& lr) {
  return forward(params, cafm ? &*cafm : nullptr, lr);
}

/// Evaluation path: frame in, clamped frame out.
template <typename T>
FrameTensor super_resolve(const BackboneParams<T>& params, const CaFMSet<T>* cafm, const FrameTensor& lr) {
  return chw_to_frame(forward(params, cafm, frame_to_chw<T>(lr)));
}

/// Zero tensors shaped like the backbone's (parallel to `tensors`).
template <typename T>
std::vector<Tensor<T>> zero_grads(const BackboneParams<T>& p) {
  std::vector<Tensor<T>> g;
  for (const auto& e : p.tensors) g.emplace_back(e.tensor.shape());
  return g;
}

template <typename T>
CaFMSet<T> zero_grads(const CaFMSet<T>& set) {
  CaFMSet<T> z{set.chunk_index, set.kernel, {}};
  for (const auto& e : set.entries) z.entries.push_back({e.layer, Tensor<T>(e.scale.shape()), Tensor<T>(e.bias.shape())});
  return z;
}

/// Back-propagates d(loss)/d(output) through the tape. Shared-weight
/// gradients accumulate into `shared_grads` (skipped when null, i.e. a frozen
/// backbone); modulation gradients accumulate into `cafm_grads` (skipped when
/// null).
template <typename T>
void backward(const BackboneParams<T>& params, const CaFMSet<T>* cafm, const ForwardTape<T>& tape,
              const Tensor<T>& dout, std::vector<Tensor<T>>* shared_grads, CaFMSet<T>* cafm_grads) {
  const auto& arch = params.arch;
  std::vector<Tensor<T>> g(arch.nodes.size());
  g[arch.output] = dout;
  auto accumulate = [&g](int node, Tensor<T>&& d) {
    if (g[node].empty()) {
      g[node] = std::move(d);
    } else {
      for (std::size_t j = 0; j < d.size(); ++j) g[node][j] += d[j];
    }
  };
  for (std::size_t ii = arch.nodes.size(); ii-- > 0;) {
    const auto& n = arch.nodes[ii];
    if (g[ii].empty()) continue;
    Tensor<T> gi = std::move(g[ii]);
    switch (n.op) {
      case OpKind::kInput: break;
      case OpKind::kConv: {
        const bool need_dx = arch.nodes[n.a].op != OpKind::kInput;
        Tensor<T>* dw = nullptr;
        Tensor<T>* db = nullptr;
        if (shared_grads != nullptr) {
          dw = &(*shared_grads)[2 * static_cast<std::size_t>(n.layer)];
          db = &(*shared_grads)[2 * static_cast<std::size_t>(n.layer) + 1];
        }
        auto dx = ops::conv2d_backward(tape.values[n.a], params.weight(n.layer), gi, dw, db, need_dx);
        if (need_dx) accumulate(n.a, std::move(dx));
        break;
      }
      case OpKind::kModulate: {
        if (cafm == nullptr) {
          accumulate(n.a, std::move(gi));
        } else {
          const int m = arch.layers[n.layer].modulation_index;
          auto* ge = cafm_grads != nullptr ? &cafm_grads->entries[m] : nullptr;
          accumulate(n.a, ops::depthwise_affine_backward(tape.values[n.a], cafm->entries[m].scale, gi,
                                                         ge ? &ge->scale : nullptr, ge ? &ge->bias : nullptr));
        }
        break;
      }
      case OpKind::kRelu: accumulate(n.a, ops::relu_backward(tape.values[n.a], gi)); break;
      case OpKind::kTanh: accumulate(n.a, ops::tanh_backward(tape.values[ii], gi)); break;
      case OpKind::kAdd: {
        Tensor<T> gb = gi;
        if (n.b_scale != 1.0)
          for (auto& v : gb.storage()) v *= static_cast<T>(n.b_scale);
        if (arch.nodes[n.b].op != OpKind::kInput) accumulate(n.b, std::move(gb));
        if (arch.nodes[n.a].op != OpKind::kInput) accumulate(n.a, std::move(gi));
        break;
      }
      case OpKind::kPixelShuffle: accumulate(n.a, ops::pixel_shuffle_backward(gi, n.factor)); break;
    }
  }
}

/// Activation of one conv layer: after its nonlinearity, or after its
/// modulation when the layer has no nonlinearity.
template <typename T>
struct FeatureMap {
  Tensor<T> data;  // (C, H, W)
  int model_index = 0;
  int layer_index = 0;
};

template <typename T>
std::vector<FeatureMap<T>> extract_features(const BackboneParams<T>& params, const CaFMSet<T>* cafm,
                                            const Tensor<T>& lr, const std::vector<int>& layers,
                                            int model_index = 0) {
  for (int l : layers)
    if (l < 0 || static_cast<std::size_t>(l) >= params.arch.layers.size())
      fail(ErrorCode::kRange, "layer index " + std::to_string(l) + " out of range");
  std::vector<FeatureMap<T>> out;
  if (layers.empty()) return out;
  const auto tape = forward_tape(params, cafm, lr);
  for (int l : layers) out.push_back({tape.values[params.arch.layers[l].feature_node], model_index, l});
  return out;
}

}  // namespace cafm
