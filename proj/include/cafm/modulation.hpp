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

// Content-aware feature modulation: a per-chunk set of channel-wise
// depth-wise filters and biases applied to every modulated conv output.

#pragma once

#include <string>
#include <vector>

#include "cafm/architecture.hpp"
#include "cafm/ops.hpp"
#include "cafm/tensor.hpp"

namespace cafm {

inline void check_kernel(int k) {
  if (k != 1 && k != 3 && k != 5 && k != 7)
    fail(ErrorCode::kConfig, "modulation kernel must be 1, 3, 5 or 7 (got " + std::to_string(k) + ")");
}

template <typename T>
struct ModulationEntry {
  std::string layer;
  Tensor<T> scale;  // (C, k, k)
  Tensor<T> bias;   // (C)
};

/// Private parameters of one chunk: one entry per modulated layer, in
/// attach-point order.
template <typename T>
struct CaFMSet {
  int chunk_index = 0;
  int kernel = 1;
  std::vector<ModulationEntry<T>> entries;

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.scale.size() + e.bias.size();
    return n;
  }

  bool all_finite() const {
    for (const auto& e : entries)
      if (!e.scale.all_finite() || !e.bias.all_finite()) return false;
    return true;
  }

  template <typename U>
  CaFMSet<U> cast() const {
    CaFMSet<U> out{chunk_index, kernel, {}};
    for (const auto& e : entries) out.entries.push_back({e.layer, e.scale.template cast<U>(), e.bias.template cast<U>()});
    return out;
  }

  friend bool operator==(const CaFMSet& a, const CaFMSet& b) {
    if (a.chunk_index != b.chunk_index || a.kernel != b.kernel || a.entries.size() != b.entries.size()) return false;
    for (std::size_t i = 0; i < a.entries.size(); ++i)
      if (a.entries[i].layer != b.entries[i].layer || !(a.entries[i].scale == b.entries[i].scale) ||
          !(a.entries[i].bias == b.entries[i].bias))
        return false;
    return true;
  }
};

/// Scale kernels are centre-tap 1, biases 0: modulation is a no-op.
template <typename T = float>
CaFMSet<T> make_identity_cafm(const Architecture& arch, int k, int chunk_index = 0) {
  check_kernel(k);
  CaFMSet<T> set{chunk_index, k, {}};
  for (const auto& layer : arch.layers) {
    if (!layer.modulated) continue;
    const auto c = static_cast<std::size_t>(layer.out_channels);
    Tensor<T> scale({c, static_cast<std::size_t>(k), static_cast<std::size_t>(k)});
    for (std::size_t ch = 0; ch < c; ++ch) scale.at(ch, k / 2, k / 2) = T(1);
    set.entries.push_back({layer.name, std::move(scale), Tensor<T>({c})});
  }
  return set;
}

template <typename T = float>
CaFMSet<T> make_identity_cafm(const BackboneConfig& config, int k, int chunk_index = 0) {
  return make_identity_cafm<T>(make_architecture(config), k, chunk_index);
}

/// Throws a shape error unless `set` matches the architecture's attach points.
template <typename T>
void check_compatible(const Architecture& arch, const CaFMSet<T>& set) {
  check_kernel(set.kernel);
  const auto mods = arch.modulated_layers();
  if (mods.size() != set.entries.size())
    fail(ErrorCode::kShape, "modulation set has " + std::to_string(set.entries.size()) + " entries, backbone has " +
                                std::to_string(mods.size()) + " attach points");
  const auto k = static_cast<std::size_t>(set.kernel);
  for (std::size_t i = 0; i < mods.size(); ++i) {
    const auto& layer = arch.layers[mods[i]];
    const auto& e = set.entries[i];
    const auto c = static_cast<std::size_t>(layer.out_channels);
    if (e.layer != layer.name || e.scale.shape() != Shape{c, k, k} || e.bias.shape() != Shape{c})
      fail(ErrorCode::kShape, "modulation entry '" + e.layer + "' does not match layer '" + layer.name + "'");
  }
}

/// out_j = a_j ⊛ x_j + b_j per channel; spatial size preserved.
template <typename T>
Tensor<T> apply_cafm(const Tensor<T>& x, const Tensor<T>& scale, const Tensor<T>& bias) {
  return ops::depthwise_affine(x, scale, bias);
}

inline std::size_t cafm_param_count(const Architecture& arch, int k) {
  check_kernel(k);
  std::size_t n = 0;
  for (const auto& l : arch.layers)
    if (l.modulated) n += static_cast<std::size_t>(l.out_channels) * (k * k + 1);
  return n;
}

inline std::size_t backbone_param_count(const Architecture& arch) {
  std::size_t n = 0;
  for (const auto& l : arch.layers) n += shape_numel(l.weight_shape()) + shape_numel(l.bias_shape());
  return n;
}

/// Per-chunk modulation parameters as a fraction of the backbone's.
inline double overhead_ratio(const BackboneConfig& config, int k) {
  const auto arch = make_architecture(config);
  return static_cast<double>(cafm_param_count(arch, k)) / static_cast<double>(backbone_param_count(arch));
}

}  // namespace cafm
