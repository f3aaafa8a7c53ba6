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

// Backbone descriptions: configuration, layer manifest and the static
// computation graph each backbone is evaluated with.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "cafm/common.hpp"
#include "cafm/tensor.hpp"

namespace cafm {

enum class Arch { kSrcnn, kEspcn, kVdsr, kEdsrM };

inline const char* to_string(Arch a) {
  switch (a) {
    case Arch::kSrcnn: return "srcnn";
    case Arch::kEspcn: return "espcn";
    case Arch::kVdsr: return "vdsr";
    case Arch::kEdsrM: return "edsr_m";
  }
  return "?";
}

inline Arch parse_arch(const std::string& s) {
  if (s == "srcnn") return Arch::kSrcnn;
  if (s == "espcn") return Arch::kEspcn;
  if (s == "vdsr") return Arch::kVdsr;
  if (s == "edsr_m" || s == "edsr") return Arch::kEdsrM;
  fail(ErrorCode::kConfig, "unknown architecture '" + s + "'");
}

inline constexpr Arch kAllArchs[] = {Arch::kSrcnn, Arch::kEspcn, Arch::kVdsr, Arch::kEdsrM};

/// `tiny` shrinks widths (and EDSR depth) for CI-speed runs; `full` is the
/// reference configuration of each backbone.
enum class Profile { kFull, kTiny };

struct BackboneConfig {
  Arch arch = Arch::kEdsrM;
  int scale = 2;
  int channels = 64;
  int n_resblocks = 16;          // edsr_m only
  double residual_scaling = 1.0;  // edsr_m only
  Profile profile = Profile::kFull;

  static BackboneConfig full(Arch arch, int scale) {
    BackboneConfig c;
    c.arch = arch;
    c.scale = scale;
    return c;
  }

  static BackboneConfig tiny(Arch arch, int scale) {
    BackboneConfig c = full(arch, scale);
    c.profile = Profile::kTiny;
    c.channels = 8;
    c.n_resblocks = 2;
    return c;
  }

  friend bool operator==(const BackboneConfig&, const BackboneConfig&) = default;
};

inline void validate(const BackboneConfig& c) {
  if (c.scale < 2 || c.scale > 4) fail(ErrorCode::kConfig, "scale must be 2, 3 or 4");
  if (c.channels < 2) fail(ErrorCode::kConfig, "channels must be >= 2");
  if (c.arch == Arch::kEdsrM) {
    if (c.n_resblocks < 1) fail(ErrorCode::kConfig, "edsr_m needs at least one residual block");
    if (c.profile == Profile::kFull && c.n_resblocks != 16)
      fail(ErrorCode::kConfig, "edsr_m (full profile) has exactly 16 residual blocks");
  }
  if ((c.arch == Arch::kSrcnn || c.arch == Arch::kEspcn) && c.channels % 2 != 0)
    fail(ErrorCode::kConfig, "srcnn/espcn need an even channel count (second layer uses channels/2)");
}

inline nlohmann::json to_json(const BackboneConfig& c) {
  return {{"arch", to_string(c.arch)},
          {"scale", c.scale},
          {"channels", c.channels},
          {"n_resblocks", c.n_resblocks},
          {"residual_scaling", c.residual_scaling},
          {"profile", c.profile == Profile::kTiny ? "tiny" : "full"}};
}

inline BackboneConfig backbone_config_from_json(const nlohmann::json& j) {
  BackboneConfig c;
  c.arch = parse_arch(j.at("arch").get<std::string>());
  c.scale = j.at("scale").get<int>();
  c.channels = j.at("channels").get<int>();
  c.n_resblocks = j.at("n_resblocks").get<int>();
  c.residual_scaling = j.at("residual_scaling").get<double>();
  const auto profile = j.at("profile").get<std::string>();
  if (profile != "tiny" && profile != "full") fail(ErrorCode::kConfig, "unknown profile '" + profile + "'");
  c.profile = profile == "tiny" ? Profile::kTiny : Profile::kFull;
  validate(c);
  return c;
}

enum class Activation { kNone, kRelu, kTanh };

/// One convolution of the backbone ("same" zero padding, stride 1).
struct LayerSpec {
  std::string name;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  Activation activation = Activation::kNone;
  bool modulated = false;
  int modulation_index = -1;  // position in the attach-point list
  int feature_node = -1;      // graph node holding this layer's feature output

  Shape weight_shape() const {
    return {static_cast<std::size_t>(out_channels), static_cast<std::size_t>(in_channels),
            static_cast<std::size_t>(kernel), static_cast<std::size_t>(kernel)};
  }
  Shape bias_shape() const { return {static_cast<std::size_t>(out_channels)}; }
};

enum class OpKind { kInput, kConv, kModulate, kRelu, kTanh, kAdd, kPixelShuffle };

/// Node of the static graph. Inputs refer to earlier nodes.
struct GraphNode {
  OpKind op = OpKind::kInput;
  int a = -1;
  int b = -1;               // second operand of kAdd
  int layer = -1;           // kConv / kModulate
  double b_scale = 1.0;     // kAdd: out = a + b_scale * b
  int factor = 0;           // kPixelShuffle
};

struct Architecture {
  BackboneConfig config;
  std::vector<LayerSpec> layers;
  std::vector<GraphNode> nodes;
  int output = -1;
  /// SRCNN/VDSR consume the bicubically pre-upscaled image.
  bool pre_upscale = false;

  std::vector<int> modulated_layers() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < layers.size(); ++i)
      if (layers[i].modulated) out.push_back(static_cast<int>(i));
    return out;
  }

  int layer_index(const std::string& name) const {
    for (std::size_t i = 0; i < layers.size(); ++i)
      if (layers[i].name == name) return static_cast<int>(i);
    return -1;
  }
};

namespace detail {

class GraphBuilder {
 public:
  explicit GraphBuilder(Architecture& arch) : arch_(arch) {}

  int input() { return push({OpKind::kInput}); }

  /// conv → modulation (when `modulated`) → activation.
  int conv(int in, std::string name, int cin, int cout, int kernel, Activation act, bool modulated) {
    LayerSpec spec;
    spec.name = std::move(name);
    spec.in_channels = cin;
    spec.out_channels = cout;
    spec.kernel = kernel;
    spec.activation = act;
    spec.modulated = modulated;
    if (modulated) spec.modulation_index = modulation_count_++;
    const int layer = static_cast<int>(arch_.layers.size());
    arch_.layers.push_back(spec);

    GraphNode conv_node{OpKind::kConv, in};
    conv_node.layer = layer;
    int x = push(conv_node);
    if (modulated) {
      GraphNode mod{OpKind::kModulate, x};
      mod.layer = layer;
      x = push(mod);
    }
    if (act == Activation::kRelu) x = push({OpKind::kRelu, x});
    if (act == Activation::kTanh) x = push({OpKind::kTanh, x});
    arch_.layers[layer].feature_node = x;
    return x;
  }

  int add(int a, int b, double b_scale = 1.0) {
    GraphNode n{OpKind::kAdd, a, b};
    n.b_scale = b_scale;
    return push(n);
  }

  int shuffle(int in, int factor) {
    GraphNode n{OpKind::kPixelShuffle, in};
    n.factor = factor;
    return push(n);
  }

 private:
  int push(GraphNode n) {
    arch_.nodes.push_back(n);
    return static_cast<int>(arch_.nodes.size()) - 1;
  }

  Architecture& arch_;
  int modulation_count_ = 0;
};

}  // namespace detail

/// Layer manifest and graph for a configuration. Every conv except the final
/// 3-channel reconstruction conv is modulated.
inline Architecture make_architecture(const BackboneConfig& config) {
  validate(config);
  Architecture arch;
  arch.config = config;
  detail::GraphBuilder g(arch);
  const int c = config.channels;
  const int s = config.scale;
  const int x = g.input();
  switch (config.arch) {
    case Arch::kSrcnn: {
      arch.pre_upscale = true;
      int h = g.conv(x, "conv1", 3, c, 9, Activation::kRelu, true);
      h = g.conv(h, "conv2", c, c / 2, 1, Activation::kRelu, true);
      arch.output = g.conv(h, "recon", c / 2, 3, 5, Activation::kNone, false);
      break;
    }
    case Arch::kVdsr: {
      arch.pre_upscale = true;
      int h = g.conv(x, "conv1", 3, c, 3, Activation::kRelu, true);
      for (int i = 2; i <= 19; ++i) h = g.conv(h, "conv" + std::to_string(i), c, c, 3, Activation::kRelu, true);
      const int residual = g.conv(h, "recon", c, 3, 3, Activation::kNone, false);
      arch.output = g.add(x, residual);
      break;
    }
    case Arch::kEspcn: {
      int h = g.conv(x, "conv1", 3, c, 5, Activation::kTanh, true);
      h = g.conv(h, "conv2", c, c / 2, 3, Activation::kTanh, true);
      h = g.conv(h, "recon", c / 2, 3 * s * s, 3, Activation::kNone, false);
      arch.output = g.shuffle(h, s);
      break;
    }
    case Arch::kEdsrM: {
      const int head = g.conv(x, "head", 3, c, 3, Activation::kNone, true);
      int h = head;
      for (int b = 0; b < config.n_resblocks; ++b) {
        const std::string p = "body." + std::to_string(b);
        int r = g.conv(h, p + ".conv1", c, c, 3, Activation::kRelu, true);
        r = g.conv(r, p + ".conv2", c, c, 3, Activation::kNone, true);
        h = g.add(h, r, config.residual_scaling);
      }
      h = g.conv(h, "tail", c, c, 3, Activation::kNone, true);
      h = g.add(h, head);
      if (s == 4) {
        h = g.shuffle(g.conv(h, "up.0", c, 4 * c, 3, Activation::kNone, true), 2);
        h = g.shuffle(g.conv(h, "up.1", c, 4 * c, 3, Activation::kNone, true), 2);
      } else {
        h = g.shuffle(g.conv(h, "up.0", c, s * s * c, 3, Activation::kNone, true), s);
      }
      arch.output = g.conv(h, "recon", c, 3, 3, Activation::kNone, false);
      break;
    }
  }
  return arch;
}

/// Names of the modulated layers, in forward order.
inline std::vector<std::string> attach_points(const BackboneConfig& config) {
  std::vector<std::string> out;
  for (const auto& l : make_architecture(config).layers)
    if (l.modulated) out.push_back(l.name);
  return out;
}

inline nlohmann::json arch_manifest_json(const Architecture& arch) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : arch.layers) {
    layers.push_back({{"name", l.name},
                      {"type", "conv2d"},
                      {"in_channels", l.in_channels},
                      {"out_channels", l.out_channels},
                      {"kernel", l.kernel},
                      {"modulated", l.modulated},
                      {"tensors", {{l.name + ".weight", l.weight_shape()}, {l.name + ".bias", l.bias_shape()}}}});
  }
  nlohmann::json j = to_json(arch.config);
  j["pre_upscale"] = arch.pre_upscale;
  j["layers"] = layers;
  return j;
}

}  // namespace cafm
