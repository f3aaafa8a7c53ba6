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

#include <cmath>
#include <numeric>

#include "test_util.hpp"

namespace cafm {
namespace {

using testing::expect_error;
using testing::random_tensor;

// Parameter counts by walking each backbone's layer plan by hand.
std::size_t conv_params(std::size_t in, std::size_t out, std::size_t k) { return out * in * k * k + out; }

std::size_t walk_params(Arch arch, int s, std::size_t c, std::size_t blocks) {
  switch (arch) {
    case Arch::kSrcnn:
      return conv_params(3, c, 9) + conv_params(c, c / 2, 1) + conv_params(c / 2, 3, 5);
    case Arch::kEspcn:
      return conv_params(3, c, 5) + conv_params(c, c / 2, 3) + conv_params(c / 2, 3 * s * s, 3);
    case Arch::kVdsr:
      return conv_params(3, c, 3) + 18 * conv_params(c, c, 3) + conv_params(c, 3, 3);
    case Arch::kEdsrM: {
      std::size_t n = conv_params(3, c, 3) + 2 * blocks * conv_params(c, c, 3) + conv_params(c, c, 3);
      n += s == 4 ? 2 * conv_params(c, 4 * c, 3) : conv_params(c, s * s * c, 3);
      return n + conv_params(c, 3, 3);
    }
  }
  return 0;
}

TEST(Architecture, LayerCounts) {
  EXPECT_EQ(make_architecture(BackboneConfig::full(Arch::kSrcnn, 2)).layers.size(), 3u);
  const auto srcnn = make_architecture(BackboneConfig::full(Arch::kSrcnn, 2));
  EXPECT_EQ(srcnn.layers[0].kernel, 9);
  EXPECT_EQ(srcnn.layers[1].kernel, 1);
  EXPECT_EQ(srcnn.layers[2].kernel, 5);
  const auto vdsr = make_architecture(BackboneConfig::full(Arch::kVdsr, 3));
  EXPECT_EQ(vdsr.layers.size(), 20u);
  EXPECT_EQ(vdsr.nodes[vdsr.output].op, OpKind::kAdd);
  EXPECT_EQ(make_architecture(BackboneConfig::full(Arch::kEdsrM, 2)).layers.size(), 36u);
  EXPECT_EQ(make_architecture(BackboneConfig::full(Arch::kEdsrM, 4)).layers.size(), 37u);
}

TEST(Architecture, GoldenVdsrManifest) {
  const auto j = arch_manifest_json(make_architecture(BackboneConfig::full(Arch::kVdsr, 3)));
  ASSERT_EQ(j["layers"].size(), 20u);
  EXPECT_EQ(j["layers"][0]["name"], "conv1");
  EXPECT_EQ(j["layers"][18]["name"], "conv19");
  EXPECT_EQ(j["layers"][19]["name"], "recon");
  EXPECT_EQ(j["layers"][19]["modulated"], false);
  EXPECT_EQ(j["pre_upscale"], true);
}

TEST(Architecture, InvalidConfigs) {
  auto c = BackboneConfig::full(Arch::kEdsrM, 2);
  c.n_resblocks = 8;
  expect_error(ErrorCode::kConfig, [&] { make_architecture(c); });
  expect_error(ErrorCode::kConfig, [] { make_architecture(BackboneConfig::full(Arch::kEdsrM, 5)); });
  expect_error(ErrorCode::kConfig, [] { parse_arch("resnet"); });
}

TEST(Params, CountsMatchShapeWalk) {
  EXPECT_EQ(count_params(build_backbone(BackboneConfig::full(Arch::kSrcnn, 2), 0)), 20099u);
  for (Arch a : kAllArchs)
    for (int s : {2, 3, 4}) {
      const auto full = BackboneConfig::full(a, s);
      EXPECT_EQ(backbone_param_count(make_architecture(full)), walk_params(a, s, 64, 16)) << to_string(a) << s;
      const auto tiny = BackboneConfig::tiny(a, s);
      EXPECT_EQ(count_params(zero_backbone<float>(make_architecture(tiny))), walk_params(a, s, 8, 2));
    }
  EXPECT_EQ(count_params(BackboneParams<float>{}), 0u);
}

TEST(Params, DeterministicInit) {
  const auto a = build_backbone(BackboneConfig::full(Arch::kEdsrM, 4), 0);
  const auto b = build_backbone(BackboneConfig::full(Arch::kEdsrM, 4), 0);
  EXPECT_TRUE(a == b);
  const auto c = build_backbone(BackboneConfig::full(Arch::kEdsrM, 4), 1);
  EXPECT_FALSE(a == c);
  for (std::size_t l = 0; l < a.arch.layers.size(); ++l) {
    const double bound = 1.0 / std::sqrt(a.arch.layers[l].in_channels * 9.0);
    for (float v : a.weight(static_cast<int>(l)).storage()) EXPECT_LE(std::abs(v), bound);
    for (float v : a.bias(static_cast<int>(l)).storage()) EXPECT_EQ(v, 0.0f);
  }
}

// Direct six-loop convolution with zero padding.
Tensor<double> naive_conv(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b) {
  const long ci = static_cast<long>(w.dim(1)), co = static_cast<long>(w.dim(0)), k = static_cast<long>(w.dim(2));
  const long h = static_cast<long>(x.dim(1)), wd = static_cast<long>(x.dim(2));
  Tensor<double> y({static_cast<std::size_t>(co), x.dim(1), x.dim(2)});
  for (long o = 0; o < co; ++o)
    for (long yy = 0; yy < h; ++yy)
      for (long xx = 0; xx < wd; ++xx) {
        double acc = b[static_cast<std::size_t>(o)];
        for (long i = 0; i < ci; ++i)
          for (long dy = 0; dy < k; ++dy)
            for (long dx = 0; dx < k; ++dx) {
              const long sy = yy + dy - k / 2, sx = xx + dx - k / 2;
              if (sy < 0 || sy >= h || sx < 0 || sx >= wd) continue;
              acc += w[((o * ci + i) * k + dy) * k + dx] * x.at(i, sy, sx);
            }
        y.at(o, yy, xx) = acc;
      }
  return y;
}

TEST(Ops, ConvMatchesNaive) {
  Rng rng(5);
  for (int k : {1, 3, 5, 9}) {
    const auto x = random_tensor<double>({3, 7, 6}, rng);
    const auto w = random_tensor<double>({4, 3, static_cast<std::size_t>(k), static_cast<std::size_t>(k)}, rng);
    const auto b = random_tensor<double>({4}, rng);
    const auto got = ops::conv2d(x, w, b);
    const auto expect = naive_conv(x, w, b);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expect[i], 1e-12);
  }
}

TEST(Ops, PixelShuffleLayout) {
  Tensor<float> x({12, 2, 3});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(i);
  const auto y = ops::pixel_shuffle(x, 2);
  ASSERT_EQ(y.shape(), (Shape{3, 4, 6}));
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t h = 0; h < 4; ++h)
      for (std::size_t w = 0; w < 6; ++w) EXPECT_EQ(y.at(c, h, w), x.at(c * 4 + (h % 2) * 2 + (w % 2), h / 2, w / 2));
  const auto back = ops::pixel_shuffle_backward(y, 2);
  EXPECT_TRUE(back == x);
}

TEST(Forward, ShapeLawOverRandomSizes) {
  Rng rng(9);
  for (Arch a : kAllArchs)
    for (int s : {2, 3, 4}) {
      const auto p = build_backbone(BackboneConfig::tiny(a, s), 1);
      for (int trial = 0; trial < 2; ++trial) {
        const std::size_t h = 1 + rng.below(7), w = 1 + rng.below(7);
        const auto y = forward<float>(p, nullptr, random_tensor<float>({3, h, w}, rng, 0, 1));
        EXPECT_EQ(y.shape(), (Shape{3, s * h, s * w})) << to_string(a) << " x" << s;
      }
    }
}

TEST(Forward, BadInputShape) {
  const auto p = build_backbone(BackboneConfig::tiny(Arch::kEspcn, 2), 1);
  expect_error(ErrorCode::kInference, [&] { forward<float>(p, nullptr, Tensor<float>({1, 4, 4})); });
  auto wrong = make_identity_cafm(BackboneConfig::tiny(Arch::kEdsrM, 2), 1);
  expect_error(ErrorCode::kShape, [&] { forward<float>(p, &wrong, Tensor<float>({3, 4, 4})); });
}

TEST(Forward, VdsrZeroReconIsBicubic) {
  auto p = build_backbone(BackboneConfig::tiny(Arch::kVdsr, 3), 2);
  const int recon = p.arch.layer_index("recon");
  for (auto& v : p.tensors[2 * recon].tensor.storage()) v = 0.0f;
  Rng rng(1);
  const auto x = random_tensor<float>({3, 5, 4}, rng, 0, 1);
  const auto y = forward<float>(p, nullptr, x);
  const auto up = bicubic_resize_chw(x, 15, 12);
  EXPECT_TRUE(y == up);
}

TEST(Forward, PureAndDeterministic) {
  const auto p = build_backbone(BackboneConfig::tiny(Arch::kEdsrM, 2), 4);
  Rng rng(2);
  const auto x = random_tensor<float>({3, 6, 6}, rng, 0, 1);
  EXPECT_TRUE(forward<float>(p, nullptr, x) == forward<float>(p, nullptr, x));
}

TEST(Forward, GoldenTinyEdsr) {
  const auto p = build_backbone(BackboneConfig::tiny(Arch::kEdsrM, 2), 0);
  Tensor<float> x({3, 4, 4});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(i % 7) / 7.0f;
  const auto y = forward<float>(p, nullptr, x);
  ASSERT_EQ(y.shape(), (Shape{3, 8, 8}));
  double sum = 0, sq = 0;
  for (float v : y.storage()) {
    sum += v;
    sq += static_cast<double>(v) * v;
  }
  // Recorded from the first verified build.
  EXPECT_NEAR(sum, 4.96555031, 1e-3);
  EXPECT_NEAR(sq, 0.804841174, 1e-3);
  EXPECT_NEAR(y.at(0, 0, 0), 0.0386755206, 1e-5);
  EXPECT_NEAR(y.at(2, 7, 5), -0.0022129782, 1e-5);
}

TEST(Features, RangeAndZeroInput) {
  auto p = build_backbone(BackboneConfig::tiny(Arch::kEdsrM, 2), 1);
  EXPECT_TRUE(extract_features<float>(p, nullptr, Tensor<float>({3, 4, 4}), {}).empty());
  expect_error(ErrorCode::kRange, [&] { extract_features<float>(p, nullptr, Tensor<float>({3, 4, 4}), {99}); });
  const auto f = extract_features<float>(p, nullptr, Tensor<float>({3, 4, 4}), {0, 1, 2, 3});
  ASSERT_EQ(f.size(), 4u);
  for (const auto& m : f)
    for (float v : m.data.storage()) EXPECT_EQ(v, 0.0f);
  Rng rng(1);
  const auto x = random_tensor<float>({3, 5, 5}, rng, 0, 1);
  const auto a = extract_features<float>(p, nullptr, x, {2});
  const auto b = extract_features<float>(p, nullptr, x, {2});
  EXPECT_TRUE(a[0].data == b[0].data);
  EXPECT_EQ(a[0].data.dim(0), 8u);
}

// Finite differences of the L1 loss in double precision.
TEST(Gradients, MatchCentralDifferences) {
  for (Arch arch : kAllArchs) {
    auto params = build_backbone<double>(BackboneConfig::tiny(arch, 2), 3);
    auto cafm = make_identity_cafm<double>(params.arch, 3);
    Rng rng(17);
    for (auto& e : cafm.entries) {
      for (auto& v : e.scale.storage()) v += rng.uniform(-0.2, 0.2);
      for (auto& v : e.bias.storage()) v = rng.uniform(-0.1, 0.1);
    }
    const auto x = random_tensor<double>({3, 5, 5}, rng, 0, 1);
    auto target = forward<double>(params, &cafm, x);
    for (auto& v : target.storage()) v += rng.uniform(0.05, 0.2) * (rng.uniform() < 0.5 ? -1 : 1);
    auto loss = [&](const BackboneParams<double>& p, const CaFMSet<double>& c) {
      const auto y = forward<double>(p, &c, x);
      double s = 0;
      for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - target[i]);
      return s / static_cast<double>(y.size());
    };
    const auto tape = forward_tape<double>(params, &cafm, x);
    const auto& y = tape.values[params.arch.output];
    Tensor<double> dout(y.shape());
    for (std::size_t i = 0; i < y.size(); ++i) dout[i] = (y[i] > target[i] ? 1.0 : -1.0) / static_cast<double>(y.size());
    auto gw = zero_grads(params);
    auto gc = zero_grads(cafm);
    backward<double>(params, &cafm, tape, dout, &gw, &gc);

    const double h = 1e-6;
    int checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
      const bool shared = trial % 2 == 0;
      double analytic, numeric;
      if (shared) {
        const std::size_t t = rng.below(params.tensors.size());
        const std::size_t i = rng.below(params.tensors[t].tensor.size());
        auto& v = params.tensors[t].tensor[i];
        const double orig = v;
        v = orig + h;
        const double lp = loss(params, cafm);
        v = orig - h;
        const double lm = loss(params, cafm);
        v = orig;
        numeric = (lp - lm) / (2 * h);
        analytic = gw[t][i];
      } else {
        const std::size_t e = rng.below(cafm.entries.size());
        const bool scale = rng.uniform() < 0.5;
        auto& tensor = scale ? cafm.entries[e].scale : cafm.entries[e].bias;
        const std::size_t i = rng.below(tensor.size());
        const double orig = tensor[i];
        tensor[i] = orig + h;
        const double lp = loss(params, cafm);
        tensor[i] = orig - h;
        const double lm = loss(params, cafm);
        tensor[i] = orig;
        numeric = (lp - lm) / (2 * h);
        analytic = scale ? gc.entries[e].scale[i] : gc.entries[e].bias[i];
      }
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      EXPECT_LE(std::abs(numeric - analytic) / denom, 1e-3) << to_string(arch) << " trial " << trial;
      ++checked;
    }
    EXPECT_EQ(checked, 20);
  }
}

}  // namespace
}  // namespace cafm
