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


#include <cstring>

#include "test_util.hpp"

namespace cafm {
namespace {

using testing::expect_error;
using testing::random_frame;
using testing::TempDir;

ModelBundle random_bundle(Rng& rng, const BackboneConfig& cfg, int n, int k) {
  auto shared = build_backbone(cfg, rng.next_u64());
  for (auto& t : shared.tensors)
    for (auto& v : t.tensor.storage()) v = static_cast<float>(rng.uniform(-1, 1));
  std::vector<CaFMSet<float>> sets;
  std::vector<ChunkSpec> ranges;
  for (int i = 0; i < n; ++i) {
    auto s = make_identity_cafm<float>(shared.arch, k, i);
    for (auto& e : s.entries) {
      for (auto& v : e.scale.storage()) v += static_cast<float>(rng.uniform(-0.2, 0.2));
      for (auto& v : e.bias.storage()) v = static_cast<float>(rng.uniform(-0.1, 0.1));
    }
    sets.push_back(std::move(s));
    ranges.push_back({i, static_cast<std::size_t>(2 * i), static_cast<std::size_t>(2 * i + 2)});
  }
  return make_bundle(shared, std::move(sets), n == 0 ? "m0" : "joint", k, ranges);
}

bool bit_equal(const Tensor<float>& a, const Tensor<float>& b) {
  return a.shape() == b.shape() && std::memcmp(a.data(), b.data(), 4 * a.size()) == 0;
}

void expect_bundles_equal(const ModelBundle& a, const ModelBundle& b) {
  EXPECT_TRUE(a.backbone_config == b.backbone_config);
  ASSERT_EQ(a.shared.tensors.size(), b.shared.tensors.size());
  for (std::size_t i = 0; i < a.shared.tensors.size(); ++i) {
    EXPECT_EQ(a.shared.tensors[i].name, b.shared.tensors[i].name);
    EXPECT_TRUE(bit_equal(a.shared.tensors[i].tensor, b.shared.tensors[i].tensor));
  }
  ASSERT_EQ(a.cafms.size(), b.cafms.size());
  for (std::size_t i = 0; i < a.cafms.size(); ++i) {
    ASSERT_EQ(a.cafms[i].entries.size(), b.cafms[i].entries.size());
    for (std::size_t e = 0; e < a.cafms[i].entries.size(); ++e) {
      EXPECT_TRUE(bit_equal(a.cafms[i].entries[e].scale, b.cafms[i].entries[e].scale));
      EXPECT_TRUE(bit_equal(a.cafms[i].entries[e].bias, b.cafms[i].entries[e].bias));
    }
  }
  EXPECT_EQ(a.manifest.n, b.manifest.n);
  EXPECT_EQ(a.manifest.kernel, b.manifest.kernel);
  EXPECT_EQ(a.manifest.mode, b.manifest.mode);
  EXPECT_EQ(a.manifest.chunk_ranges, b.manifest.chunk_ranges);
}

TEST(Pack, RoundTripIsBitExactAcrossArchsAndKernels) {
  Rng rng(11);
  for (Arch a : {Arch::kSrcnn, Arch::kEspcn, Arch::kVdsr, Arch::kEdsrM})
    for (int k : {1, 3, 5, 7}) {
      const auto b = random_bundle(rng, BackboneConfig::tiny(a, 2), 2, k);
      const auto bytes = pack(b);
      const auto back = unpack(bytes);
      expect_bundles_equal(b, back);
      EXPECT_EQ(pack(back), bytes);
    }
}

TEST(Pack, SpecialFloatsSurvive) {
  Rng rng(12);
  auto b = random_bundle(rng, BackboneConfig::tiny(Arch::kEdsrM, 2), 1, 1);
  auto& t = b.shared.tensors[0].tensor.storage();
  t[0] = -0.0f;
  t[1] = std::numeric_limits<float>::denorm_min();
  t[2] = std::numeric_limits<float>::max();
  expect_bundles_equal(b, unpack(pack(b)));
}

TEST(Pack, HeaderLayout) {
  Rng rng(13);
  const auto b = random_bundle(rng, BackboneConfig::tiny(Arch::kSrcnn, 3), 1, 1);
  const auto bytes = pack(b);
  ASSERT_GT(bytes.size(), 12u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "CAFM");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
  const std::uint32_t len = bytes[8] | (bytes[9] << 8) | (bytes[10] << 16) | (static_cast<std::uint32_t>(bytes[11]) << 24);
  const auto j = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + len);
  EXPECT_EQ(j.at("n").get<int>(), 1);
  EXPECT_EQ(j.at("scale").get<int>(), 3);
  // trailer: section 0 starts right after the tensor count
  std::uint64_t off0 = 0;
  const std::size_t trailer = bytes.size() - 16;
  for (int i = 0; i < 8; ++i) off0 |= static_cast<std::uint64_t>(bytes[trailer + i]) << (8 * i);
  EXPECT_EQ(off0, 12u + len + 4u);
}

TEST(Pack, DeterministicBytes) {
  Rng r1(14), r2(14);
  EXPECT_EQ(pack(random_bundle(r1, BackboneConfig::tiny(Arch::kVdsr, 2), 3, 3)),
            pack(random_bundle(r2, BackboneConfig::tiny(Arch::kVdsr, 2), 3, 3)));
}

TEST(Pack, EmptyCafmSection) {
  Rng rng(15);
  const auto b = random_bundle(rng, BackboneConfig::tiny(Arch::kEdsrM, 2), 0, 1);
  const auto back = unpack(pack(b));
  EXPECT_TRUE(back.cafms.empty());
  EXPECT_EQ(back.manifest.n, 0);
  expect_bundles_equal(b, back);
}

TEST(Pack, InconsistentModelIsPackError) {
  Rng rng(16);
  auto b = random_bundle(rng, BackboneConfig::tiny(Arch::kEdsrM, 2), 2, 1);
  auto wrong_n = b;
  wrong_n.manifest.n = 3;
  expect_error(ErrorCode::kPack, [&] { pack(wrong_n); });
  auto wrong_shape = b;
  wrong_shape.cafms[0].entries[0].scale = Tensor<float>({3, 1, 1});
  expect_error(ErrorCode::kPack, [&] { pack(wrong_shape); });
  auto wrong_kernel = b;
  wrong_kernel.manifest.kernel = 3;
  expect_error(ErrorCode::kPack, [&] { pack(wrong_kernel); });
  auto wrong_scale = b;
  wrong_scale.manifest.scale = 4;
  expect_error(ErrorCode::kPack, [&] { pack(wrong_scale); });
}

TEST(Unpack, CorruptionErrors) {
  Rng rng(17);
  const auto bytes = pack(random_bundle(rng, BackboneConfig::tiny(Arch::kEdsrM, 2), 2, 1));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  expect_error(ErrorCode::kBundleFormat, [&] { unpack(bad_magic); });
  auto bad_version = bytes;
  bad_version[4] = 9;
  expect_error(ErrorCode::kBundleFormat, [&] { unpack(bad_version); });
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{11}, bytes.size() / 2, bytes.size() - 1}) {
    const std::vector<std::uint8_t> t(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    expect_error(ErrorCode::kBundleTruncated, [&] { unpack(t); });
  }
  auto extra = bytes;
  extra.push_back(0);
  expect_error(ErrorCode::kBundleFormat, [&] { unpack(extra); });
}

TEST(Unpack, ManifestArchMismatchIsShapeError) {
  Rng rng(18);
  auto b = random_bundle(rng, BackboneConfig::tiny(Arch::kEdsrM, 2), 1, 1);
  auto bytes = pack(b);
  // Rewrite the manifest to claim wider channels, keeping the tensors.
  const std::uint32_t len = bytes[8] | (bytes[9] << 8) | (bytes[10] << 16) | (static_cast<std::uint32_t>(bytes[11]) << 24);
  std::string text(bytes.begin() + 12, bytes.begin() + 12 + len);
  auto j = nlohmann::json::parse(text);
  j["backbone"]["channels"] = 12;
  const std::string fixed = j.dump();
  std::vector<std::uint8_t> out(bytes.begin(), bytes.begin() + 8);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(fixed.size() >> (8 * i)));
  out.insert(out.end(), fixed.begin(), fixed.end());
  const std::size_t shift = fixed.size() - len;
  std::vector<std::uint8_t> rest(bytes.begin() + 12 + len, bytes.end());
  const std::size_t trailer = rest.size() - 16;
  for (int s = 0; s < 2; ++s) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(rest[trailer + 8 * s + i]) << (8 * i);
    v += shift;
    for (int i = 0; i < 8; ++i) rest[trailer + 8 * s + i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
  out.insert(out.end(), rest.begin(), rest.end());
  expect_error(ErrorCode::kBundleShape, [&] { unpack(out); });
}

TEST(Files, SaveLoadAndMissing) {
  TempDir dir("bundle");
  Rng rng(19);
  const auto b = random_bundle(rng, BackboneConfig::tiny(Arch::kEspcn, 4), 2, 3);
  save_bundle(dir.path() / "m.bundle", b);
  expect_bundles_equal(b, load_bundle(dir.path() / "m.bundle"));
  expect_error(ErrorCode::kIo, [&] { load_bundle(dir.path() / "none.bundle"); });
}

TEST(Reader, ChunkIsolation) {
  TempDir dir("reader");
  Rng rng(20);
  const auto b = random_bundle(rng, BackboneConfig::tiny(Arch::kEdsrM, 2), 3, 1);
  const auto path = dir.path() / "j.bundle";
  save_bundle(path, b);
  BundleReader reader(path);
  EXPECT_EQ(reader.manifest().n, 3);
  reader.clear_accesses();
  const auto lr = random_frame(6, 6, rng);
  const auto sr = reconstruct_chunk(reader, 1, {lr});
  const auto [c1s, c1e] = reader.section_span(2);
  bool read_own = false;
  for (const auto& a : reader.accesses()) {
    for (std::size_t s : {std::size_t{1}, std::size_t{3}}) {
      const auto [s0, s1] = reader.section_span(s);
      EXPECT_TRUE(a.offset + a.length <= s0 || a.offset >= s1) << "touched foreign section " << s;
    }
    if (a.offset == c1s && a.length == c1e - c1s) read_own = true;
  }
  EXPECT_TRUE(read_own);
  EXPECT_EQ(sr.front(), super_resolve(b.shared, &b.cafms[1], lr));
  EXPECT_TRUE(reader.load_chunk(2) == b.cafms[2]);
  expect_error(ErrorCode::kRange, [&] { reader.load_chunk(3); });
  expect_error(ErrorCode::kRange, [&] { reader.load_chunk(-1); });
}

TEST(Storage, Arithmetic) {
  TempDir dir("storage");
  Rng rng(21);
  const auto b = random_bundle(rng, BackboneConfig::tiny(Arch::kEdsrM, 2), 2, 1);
  const auto path = dir.path() / "j.bundle";
  save_bundle(path, b);
  write_text_file(dir.path() / "a.png", std::string(100, 'x'));
  write_text_file(dir.path() / "b.png", std::string(23, 'y'));
  const auto r = storage_report(path, {dir.path() / "a.png", dir.path() / "b.png"});
  EXPECT_EQ(r.lr_video_bytes, 123u);
  ASSERT_EQ(r.per_chunk_cafm_bytes.size(), 2u);
  std::uint64_t chunks = 0;
  for (auto c : r.per_chunk_cafm_bytes) chunks += c;
  EXPECT_EQ(r.total_bytes, r.lr_video_bytes + r.shared_bytes + chunks);
  EXPECT_EQ(r.shared_bytes + chunks, std::filesystem::file_size(path));
  // each chunk section: per tensor 2 + name + 3 + 4*ndim + 4*numel bytes
  std::uint64_t expect = 0;
  auto record = [](const std::string& name, const Tensor<float>& t) { return 2 + name.size() + 3 + 4 * t.ndim() + 4 * t.size(); };
  for (const auto& e : b.cafms[0].entries) expect += record(e.layer + ".scale", e.scale) + record(e.layer + ".bias", e.bias);
  EXPECT_EQ(r.per_chunk_cafm_bytes[0], expect);
  expect_error(ErrorCode::kIo, [&] { storage_report(path, {dir.path() / "missing.png"}); });

  const auto m0 = random_bundle(rng, BackboneConfig::tiny(Arch::kEdsrM, 2), 0, 1);
  save_bundle(dir.path() / "m0.bundle", m0);
  EXPECT_TRUE(storage_report(dir.path() / "m0.bundle", {}).per_chunk_cafm_bytes.empty());
}

TEST(Storage, SubOnePercentPayloadLawAtFullWidth) {
  TempDir dir("law");
  for (Arch a : {Arch::kSrcnn, Arch::kEspcn, Arch::kVdsr, Arch::kEdsrM}) {
    BackboneConfig cfg;
    cfg.arch = a;
    cfg.scale = 2;
    const auto shared = build_backbone(cfg, 1);
    std::vector<CaFMSet<float>> sets;
    for (int i = 0; i < 5; ++i) sets.push_back(make_identity_cafm<float>(shared.arch, 1, i));
    const auto path = dir.path() / (std::string(to_string(a)) + ".bundle");
    save_bundle(path, make_bundle(shared, sets, "joint", 1, {}));
    const auto r = storage_report(path, {});
    ASSERT_EQ(r.per_chunk_cafm_bytes.size(), 5u);
    for (const auto& s : sets) EXPECT_LT(static_cast<double>(cafm_payload_bytes(s)), 0.01 * shared_payload_bytes(shared));
    // n separate full models against one shared backbone plus n sets
    const double per = static_cast<double>(cafm_payload_bytes(sets[0])) / shared_payload_bytes(shared);
    const double ratio = 5.0 * shared_payload_bytes(shared) /
                         (shared_payload_bytes(shared) + 5.0 * cafm_payload_bytes(sets[0]));
    EXPECT_NEAR(ratio, 5.0 / (1.0 + per * 5.0), 1e-9);
    EXPECT_GT(ratio, 5.0 / (1.0 + 0.01 * 5.0));
  }
}

TEST(Reconstruct, MatchesDirectForwardAndStitches) {
  Rng rng(22);
  const auto b = random_bundle(rng, BackboneConfig::tiny(Arch::kEdsrM, 2), 2, 3);
  std::vector<FrameTensor> lr;
  for (int i = 0; i < 4; ++i) lr.push_back(random_frame(6, 7, rng));
  const auto video = reconstruct_video(b, lr);
  ASSERT_EQ(video.size(), 4u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(video[i], super_resolve(b.shared, &b.cafms[i / 2], lr[i]));
    for (float v : video[i].data) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
  expect_error(ErrorCode::kRange, [&] { reconstruct_chunk(b, 2, lr); });
  expect_error(ErrorCode::kRange, [&] { reconstruct_video(b, {lr[0]}); });
}

TEST(Reconstruct, IdentityBundleEqualsPlainBackbone) {
  Rng rng(23);
  const auto shared = build_backbone(BackboneConfig::tiny(Arch::kVdsr, 2), 4);
  const auto b = make_bundle(shared, {make_identity_cafm<float>(shared.arch, 5, 0)}, "joint", 5, {});
  const auto lr = random_frame(8, 8, rng);
  EXPECT_EQ(reconstruct_chunk(b, 0, {lr}).front(), super_resolve<float>(shared, nullptr, lr));
  const auto m0 = make_bundle(shared, {}, "m0", 1, {});
  EXPECT_EQ(reconstruct_chunk(m0, 7, {lr}).front(), super_resolve<float>(shared, nullptr, lr));
}

TEST(Reconstruct, UnpackedOutputsMatchPrePack) {
  Rng rng(24);
  const auto b = random_bundle(rng, BackboneConfig::tiny(Arch::kEspcn, 3), 2, 1);
  const auto back = unpack(pack(b));
  const auto lr = random_frame(5, 5, rng);
  for (int c = 0; c < 2; ++c)
    EXPECT_EQ(reconstruct_chunk(back, c, {lr}).front(), reconstruct_chunk(b, c, {lr}).front());
}

}  // namespace
}  // namespace cafm
