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

#include "test_util.hpp"

namespace cafm {
namespace {

using testing::expect_error;
using testing::random_tensor;

TEST(Identity, Kernels) {
  const auto arch = make_architecture(BackboneConfig::tiny(Arch::kEdsrM, 2));
  const auto k1 = make_identity_cafm(arch, 1);
  for (const auto& e : k1.entries) {
    for (float v : e.scale.storage()) EXPECT_EQ(v, 1.0f);
    for (float v : e.bias.storage()) EXPECT_EQ(v, 0.0f);
  }
  const auto k3 = make_identity_cafm(arch, 3);
  for (const auto& e : k3.entries)
    for (std::size_t c = 0; c < e.scale.dim(0); ++c)
      for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 0; x < 3; ++x) EXPECT_EQ(e.scale.at(c, y, x), (y == 1 && x == 1) ? 1.0f : 0.0f);
  expect_error(ErrorCode::kConfig, [&] { make_identity_cafm(arch, 2); });
  expect_error(ErrorCode::kConfig, [&] { make_identity_cafm(arch, 9); });
}

TEST(Identity, ForwardBitwiseUnchanged) {
  Rng rng(21);
  for (Arch a : kAllArchs)
    for (int k : {1, 3, 5, 7}) {
      const auto p = build_backbone(BackboneConfig::tiny(a, 2), 5);
      const auto id = make_identity_cafm(p.arch, k);
      const auto x = random_tensor<float>({3, 6, 5}, rng, 0, 1);
      EXPECT_TRUE(forward<float>(p, &id, x) == forward<float>(p, nullptr, x)) << to_string(a) << " k=" << k;
    }
}

TEST(Apply, Eq1Arithmetic) {
  Tensor<float> x({1, 1, 2}, {2.0f, -1.0f});
  const auto y = apply_cafm(x, Tensor<float>({1, 1, 1}, {0.5f}), Tensor<float>({1}, {1.0f}));
  EXPECT_EQ(y[0], 2.0f);
  EXPECT_EQ(y[1], 0.5f);
}

TEST(Apply, ConstantInteriorK3) {
  Tensor<double> x({1, 5, 5});
  for (auto& v : x.storage()) v = 0.7;
  Tensor<double> a({1, 3, 3}, {0.1, -0.2, 0.3, 0.05, 0.4, 0.1, -0.1, 0.2, 0.15});
  double w = 0;
  for (double v : a.storage()) w += v;
  const auto y = apply_cafm(x, a, Tensor<double>({1}, {0.25}));
  for (std::size_t r = 1; r < 4; ++r)
    for (std::size_t c = 1; c < 4; ++c) EXPECT_NEAR(y.at(0, r, c), 0.7 * w + 0.25, 1e-12);
  // Zero padding at the corner: only the lower-right 2x2 taps see data.
  EXPECT_NEAR(y.at(0, 0, 0), 0.7 * (0.4 + 0.1 + 0.2 + 0.15) + 0.25, 1e-12);
}

// Hand convolution with zero padding, one channel at a time.
TEST(Apply, MatchesNaiveDepthwise) {
  Rng rng(4);
  for (int k : {1, 3, 5, 7}) {
    const auto x = random_tensor<double>({3, 6, 7}, rng);
    const auto a = random_tensor<double>({3, static_cast<std::size_t>(k), static_cast<std::size_t>(k)}, rng);
    const auto b = random_tensor<double>({3}, rng);
    const auto y = apply_cafm(x, a, b);
    for (long c = 0; c < 3; ++c)
      for (long r = 0; r < 6; ++r)
        for (long q = 0; q < 7; ++q) {
          double acc = b[c];
          for (long dy = 0; dy < k; ++dy)
            for (long dx = 0; dx < k; ++dx) {
              const long sy = r + dy - k / 2, sx = q + dx - k / 2;
              if (sy >= 0 && sy < 6 && sx >= 0 && sx < 7) acc += a.at(c, dy, dx) * x.at(c, sy, sx);
            }
          EXPECT_NEAR(y.at(c, r, q), acc, 1e-12);
        }
  }
}

TEST(Apply, ChannelMismatch) {
  expect_error(ErrorCode::kShape,
               [] { apply_cafm(Tensor<float>({2, 3, 3}), Tensor<float>({3, 1, 1}), Tensor<float>({3})); });
}

TEST(Apply, ChannelLocality) {
  Rng rng(8);
  const auto x = random_tensor<double>({4, 5, 5}, rng);
  auto a = random_tensor<double>({4, 3, 3}, rng);
  auto b = random_tensor<double>({4}, rng);
  const auto y0 = apply_cafm(x, a, b);
  a.at(2, 0, 1) += 0.5;
  b[2] += 0.3;
  const auto y1 = apply_cafm(x, a, b);
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < 25; ++i) {
      if (c != 2) {
        EXPECT_EQ(y0[c * 25 + i], y1[c * 25 + i]);
      }
    }
}

TEST(Apply, Linearity) {
  Rng rng(10);
  const auto x = random_tensor<double>({2, 4, 4}, rng);
  const auto z = random_tensor<double>({2, 4, 4}, rng);
  const auto a = random_tensor<double>({2, 5, 5}, rng);
  const auto b = random_tensor<double>({2}, rng);
  const Tensor<double> zero({2});
  const double alpha = 0.3, beta = -1.7;
  Tensor<double> mix(x.shape());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = alpha * x[i] + beta * z[i];
  const auto lhs = apply_cafm(mix, a, b);
  const auto px = apply_cafm(x, a, zero);
  const auto pz = apply_cafm(z, a, zero);
  for (std::size_t i = 0; i < lhs.size(); ++i) EXPECT_NEAR(lhs[i], alpha * px[i] + beta * pz[i] + b[i / 16], 1e-12);
}

TEST(Overhead, ExactEdsrRatios) {
  EXPECT_DOUBLE_EQ(overhead_ratio(BackboneConfig::full(Arch::kEdsrM, 2), 1), 4864.0 / 1369859.0);
  EXPECT_DOUBLE_EQ(overhead_ratio(BackboneConfig::full(Arch::kEdsrM, 4), 3), 10.0 * 2688.0 / 1517571.0);
  EXPECT_DOUBLE_EQ(overhead_ratio(BackboneConfig::full(Arch::kSrcnn, 3), 1), 192.0 / 20099.0);
}

TEST(Overhead, BelowOnePercentEverywhere) {
  for (Arch a : kAllArchs)
    for (int s : {2, 3, 4}) EXPECT_LT(overhead_ratio(BackboneConfig::full(a, s), 1), 0.01) << to_string(a) << s;
}

TEST(Overhead, KernelGrowthBelowNineX) {
  for (Arch a : kAllArchs)
    for (int s : {2, 3, 4}) {
      const auto c = BackboneConfig::full(a, s);
      EXPECT_LT(overhead_ratio(c, 3), 9 * overhead_ratio(c, 1));
      EXPECT_GT(overhead_ratio(c, 3), overhead_ratio(c, 1));
    }
}

TEST(Overhead, CountMatchesOutputChannelWalk) {
  for (Arch a : kAllArchs)
    for (int s : {2, 3, 4})
      for (int k : {1, 3, 5, 7}) {
        const auto arch = make_architecture(BackboneConfig::full(a, s));
        std::size_t channels = 0;
        for (std::size_t l = 0; l + 1 < arch.layers.size(); ++l) channels += arch.layers[l].out_channels;
        EXPECT_EQ(cafm_param_count(arch, k), channels * (k * k + 1));
        EXPECT_EQ(make_identity_cafm(arch, k).param_count(), cafm_param_count(arch, k));
      }
}

TEST(AttachPoints, ExclusionRule) {
  const auto srcnn = attach_points(BackboneConfig::full(Arch::kSrcnn, 2));
  EXPECT_EQ(srcnn, (std::vector<std::string>{"conv1", "conv2"}));
  const auto edsr = attach_points(BackboneConfig::full(Arch::kEdsrM, 4));
  EXPECT_EQ(edsr.size(), 1u + 32u + 1u + 2u);
  EXPECT_EQ(edsr.front(), "head");
  EXPECT_EQ(edsr.back(), "up.1");
  const auto tiny = attach_points(BackboneConfig::tiny(Arch::kEdsrM, 2));
  EXPECT_EQ(tiny.size(), 1u + 2u * 2u + 1u + 1u);  // head, body, tail, up.0
  EXPECT_EQ(attach_points(BackboneConfig::full(Arch::kVdsr, 2)).size(), 19u);
  EXPECT_EQ(attach_points(BackboneConfig::full(Arch::kEspcn, 3)).size(), 2u);
}

TEST(Compatibility, RejectsForeignSets) {
  const auto arch = make_architecture(BackboneConfig::tiny(Arch::kEdsrM, 2));
  auto set = make_identity_cafm(arch, 1);
  EXPECT_NO_THROW(check_compatible(arch, set));
  set.entries.pop_back();
  expect_error(ErrorCode::kShape, [&] { check_compatible(arch, set); });
  auto other = make_identity_cafm(BackboneConfig::tiny(Arch::kEdsrM, 3), 1);
  expect_error(ErrorCode::kShape, [&] { check_compatible(arch, other); });
}

}  // namespace
}  // namespace cafm
