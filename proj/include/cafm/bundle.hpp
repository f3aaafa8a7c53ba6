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

// Delivery bundle: one shared backbone plus n per-chunk modulation sets in a
// single file.
//
// Layout (all integers little-endian):
//   "CAFM" | version u32 | manifest_len u32 | manifest (UTF-8 JSON)
//   tensor_count u32
//   per tensor: name_len u16 | name | section u8 (0 shared, i+1 chunk i)
//               | dtype u8 (0 = f32) | ndim u8 | dims u32[ndim] | f32 payload
//   trailer: start offset u64 of each section 0..n
//
// Sections are stored contiguously in order, so section i spans from its
// start offset to the next section's start (or to the trailer).

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cafm/architecture.hpp"
#include "cafm/media.hpp"
#include "cafm/modulation.hpp"
#include "cafm/network.hpp"

namespace cafm {

inline constexpr std::array<char, 4> kBundleMagic = {'C', 'A', 'F', 'M'};
inline constexpr std::uint32_t kBundleVersion = 1;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

struct BundleManifest {
  std::uint32_t format_version = kBundleVersion;
  std::string mode = "joint";
  int scale = 2;
  int n = 0;  // number of modulation sets
  int kernel = 1;
  std::vector<ChunkSpec> chunk_ranges;  // frame ranges reconstructed with each set
};

struct ModelBundle {
  BackboneConfig backbone_config;
  BackboneParams<float> shared;
  std::vector<CaFMSet<float>> cafms;
  BundleManifest manifest;
};

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    u32(bits);
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  std::size_t size() const { return bytes_.size(); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size, std::size_t base = 0)
      : data_(data), size_(size), base_(base) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32() {
    const std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t offset() const { return base_ + pos_; }
  std::size_t remaining() const { return size_ - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > size_ - pos_) fail(ErrorCode::kBundleTruncated, "bundle ends before expected data");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

inline void write_tensor(ByteWriter& w, const std::string& name, std::uint8_t section, const Tensor<float>& t) {
  if (name.size() > 0xFFFF) fail(ErrorCode::kPack, "tensor name too long");
  if (t.ndim() > 0xFF) fail(ErrorCode::kPack, "tensor rank too large");
  w.u16(static_cast<std::uint16_t>(name.size()));
  w.raw(name.data(), name.size());
  w.u8(section);
  w.u8(0);
  w.u8(static_cast<std::uint8_t>(t.ndim()));
  for (auto d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
  for (float v : t.storage()) w.f32(v);
}

struct TensorRecord {
  std::string name;
  std::uint8_t section = 0;
  Tensor<float> tensor;
};

inline TensorRecord read_tensor(ByteReader& r) {
  TensorRecord rec;
  const std::uint16_t len = r.u16();
  rec.name = r.str(len);
  rec.section = r.u8();
  const std::uint8_t dtype = r.u8();
  if (dtype != 0) fail(ErrorCode::kBundleFormat, "unsupported dtype " + std::to_string(dtype) + " for '" + rec.name + "'");
  const std::uint8_t ndim = r.u8();
  Shape shape(ndim);
  for (auto& d : shape) d = r.u32();
  const std::size_t numel = shape_numel(shape);
  if (numel > r.remaining() / 4) fail(ErrorCode::kBundleTruncated, "payload of '" + rec.name + "' runs past the end");
  std::vector<float> data(numel);
  for (auto& v : data) v = r.f32();
  rec.tensor = Tensor<float>(std::move(shape), std::move(data));
  return rec;
}

inline nlohmann::json manifest_json(const ModelBundle& b) {
  nlohmann::json ranges = nlohmann::json::array();
  for (const auto& c : b.manifest.chunk_ranges) ranges.push_back({c.start, c.end});
  return {{"format_version", b.manifest.format_version},
          {"mode", b.manifest.mode},
          {"scale", b.manifest.scale},
          {"n", b.manifest.n},
          {"kernel", b.manifest.kernel},
          {"chunk_ranges", ranges},
          {"backbone", to_json(b.backbone_config)}};
}

struct Header {
  std::uint32_t version = 0;
  nlohmann::json manifest;
  std::size_t table_offset = 0;  // offset of tensor_count
};

inline Header read_header(ByteReader& r) {
  const std::string magic = r.str(4);
  if (std::memcmp(magic.data(), kBundleMagic.data(), 4) != 0) fail(ErrorCode::kBundleFormat, "bad magic (not a CAFM bundle)");
  Header h;
  h.version = r.u32();
  if (h.version != kBundleVersion) fail(ErrorCode::kBundleFormat, "unsupported bundle version " + std::to_string(h.version));
  const std::uint32_t len = r.u32();
  const std::string text = r.str(len);
  try {
    h.manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kBundleFormat, std::string("manifest is not valid JSON: ") + e.what());
  }
  h.table_offset = r.offset();
  return h;
}

inline void parse_manifest(const nlohmann::json& j, ModelBundle& b) {
  try {
    b.manifest.format_version = j.at("format_version").get<std::uint32_t>();
    b.manifest.mode = j.at("mode").get<std::string>();
    b.manifest.scale = j.at("scale").get<int>();
    b.manifest.n = j.at("n").get<int>();
    b.manifest.kernel = j.at("kernel").get<int>();
    int i = 0;
    for (const auto& r : j.at("chunk_ranges"))
      b.manifest.chunk_ranges.push_back({i++, r.at(0).get<std::size_t>(), r.at(1).get<std::size_t>()});
    b.backbone_config = backbone_config_from_json(j.at("backbone"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kBundleFormat, std::string("malformed manifest: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::kBundleFormat, std::string("malformed manifest: ") + e.what());
  }
  if (b.manifest.n < 0 || b.manifest.n > 255) fail(ErrorCode::kBundleFormat, "manifest n out of range");
  if (b.manifest.scale != b.backbone_config.scale) fail(ErrorCode::kBundleShape, "manifest scale differs from backbone scale");
}

/// Builds a CaFM set for `arch` from the tensor records of one section.
inline CaFMSet<float> cafm_from_records(const Architecture& arch, const std::vector<TensorRecord>& records, int chunk,
                                        int kernel) {
  CaFMSet<float> set{chunk, kernel, {}};
  if (records.size() % 2 != 0) fail(ErrorCode::kBundleShape, "odd tensor count in chunk section");
  for (std::size_t i = 0; i < records.size(); i += 2) {
    const auto& s = records[i];
    const auto& b = records[i + 1];
    const auto dot = s.name.rfind('.');
    if (dot == std::string::npos || s.name.substr(dot) != ".scale" || b.name != s.name.substr(0, dot) + ".bias")
      fail(ErrorCode::kBundleShape, "unexpected tensor '" + s.name + "' in chunk section");
    set.entries.push_back({s.name.substr(0, dot), s.tensor, b.tensor});
  }
  try {
    check_compatible(arch, set);
  } catch (const Error& e) {
    fail(ErrorCode::kBundleShape, e.what());
  }
  return set;
}

}  // namespace detail

/// Throws a pack error unless the bundle is internally consistent.
inline void validate(const ModelBundle& b) {
  try {
    check_params(b.shared);
    if (!(b.shared.config() == b.backbone_config)) fail(ErrorCode::kPack, "backbone config differs from parameters");
    if (b.manifest.n != static_cast<int>(b.cafms.size())) fail(ErrorCode::kPack, "manifest n differs from CaFM count");
    if (b.manifest.n > 255) fail(ErrorCode::kPack, "at most 255 chunk sections fit the section tag");
    if (b.manifest.scale != b.backbone_config.scale) fail(ErrorCode::kPack, "manifest scale differs from backbone");
    for (const auto& set : b.cafms) {
      check_compatible(b.shared.arch, set);
      if (set.kernel != b.manifest.kernel) fail(ErrorCode::kPack, "CaFM kernel differs from manifest kernel");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kPack) throw;
    fail(ErrorCode::kPack, e.what());
  }
}

/// Serializes deterministically: identical bundles give identical bytes.
inline std::vector<std::uint8_t> pack(const ModelBundle& b) {
  validate(b);
  detail::ByteWriter w;
  w.raw(kBundleMagic.data(), 4);
  w.u32(kBundleVersion);
  const std::string manifest = detail::manifest_json(b).dump();
  w.u32(static_cast<std::uint32_t>(manifest.size()));
  w.raw(manifest.data(), manifest.size());
  std::size_t count = b.shared.tensors.size();
  for (const auto& set : b.cafms) count += 2 * set.entries.size();
  w.u32(static_cast<std::uint32_t>(count));
  std::vector<std::uint64_t> offsets;
  offsets.push_back(w.size());
  for (const auto& e : b.shared.tensors) detail::write_tensor(w, e.name, 0, e.tensor);
  for (std::size_t i = 0; i < b.cafms.size(); ++i) {
    offsets.push_back(w.size());
    const auto section = static_cast<std::uint8_t>(i + 1);
    for (const auto& e : b.cafms[i].entries) {
      detail::write_tensor(w, e.layer + ".scale", section, e.scale);
      detail::write_tensor(w, e.layer + ".bias", section, e.bias);
    }
  }
  for (auto off : offsets) w.u64(off);
  return std::move(w.bytes());
}

/// Parses and fully validates a bundle.
inline ModelBundle unpack(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes.data(), bytes.size());
  const auto header = detail::read_header(r);
  ModelBundle b;
  detail::parse_manifest(header.manifest, b);
  const auto arch = make_architecture(b.backbone_config);

  const std::uint32_t count = r.u32();
  std::vector<std::vector<detail::TensorRecord>> sections(static_cast<std::size_t>(b.manifest.n) + 1);
  std::vector<std::uint64_t> starts(sections.size(), 0);
  std::vector<bool> seen(sections.size(), false);
  int last_section = 0;
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::size_t at = r.offset();
    auto rec = detail::read_tensor(r);
    if (rec.section >= sections.size()) fail(ErrorCode::kBundleShape, "section tag beyond manifest n");
    if (rec.section < last_section) fail(ErrorCode::kBundleFormat, "sections out of order");
    if (!seen[rec.section]) {
      seen[rec.section] = true;
      starts[rec.section] = at;
    }
    last_section = rec.section;
    sections[rec.section].push_back(std::move(rec));
  }
  const std::size_t trailer_bytes = 8 * sections.size();
  if (r.remaining() < trailer_bytes) fail(ErrorCode::kBundleTruncated, "offset trailer missing or short");
  if (r.remaining() > trailer_bytes) fail(ErrorCode::kBundleFormat, "trailing bytes after offset table");
  for (std::size_t i = 0; i < sections.size(); ++i) {
    const std::uint64_t off = r.u64();
    if (!seen[i]) fail(ErrorCode::kBundleShape, "section " + std::to_string(i) + " is empty");
    if (off != starts[i]) fail(ErrorCode::kBundleFormat, "offset table disagrees with section " + std::to_string(i));
  }

  b.shared = zero_backbone<float>(arch);
  if (sections[0].size() != b.shared.tensors.size())
    fail(ErrorCode::kBundleShape, "shared section has " + std::to_string(sections[0].size()) + " tensors, expected " +
                                      std::to_string(b.shared.tensors.size()));
  for (std::size_t i = 0; i < sections[0].size(); ++i) {
    auto& dst = b.shared.tensors[i];
    auto& src = sections[0][i];
    if (src.name != dst.name || src.tensor.shape() != dst.tensor.shape())
      fail(ErrorCode::kBundleShape, "shared tensor '" + src.name + "' does not match the manifest (expected '" +
                                        dst.name + "' " + shape_string(dst.tensor.shape()) + ")");
    dst.tensor = std::move(src.tensor);
  }
  for (int i = 0; i < b.manifest.n; ++i)
    b.cafms.push_back(detail::cafm_from_records(arch, sections[static_cast<std::size_t>(i) + 1], i, b.manifest.kernel));
  return b;
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

inline void save_bundle(const std::filesystem::path& path, const ModelBundle& b) { write_bytes(path, pack(b)); }
inline ModelBundle load_bundle(const std::filesystem::path& path) { return unpack(read_bytes(path)); }

/// Random-access view of a bundle file. Reads the header and offset table on
/// open; the shared section and each chunk section are fetched on demand.
/// Every byte range read is logged so callers can audit what was fetched.
class BundleReader {
 public:
  struct Access {
    std::uint64_t offset;
    std::uint64_t length;
  };

  explicit BundleReader(std::filesystem::path path) : path_(std::move(path)), in_(path_, std::ios::binary) {
    if (!in_) fail(ErrorCode::kIo, "cannot open '" + path_.string() + "'");
    in_.seekg(0, std::ios::end);
    file_size_ = static_cast<std::uint64_t>(in_.tellg());
    auto head = read_range(0, std::min<std::uint64_t>(file_size_, 12));
    detail::ByteReader hr(head.data(), head.size());
    if (hr.remaining() < 12) fail(ErrorCode::kBundleTruncated, "bundle shorter than its header");
    const std::string magic = hr.str(4);
    if (std::memcmp(magic.data(), kBundleMagic.data(), 4) != 0) fail(ErrorCode::kBundleFormat, "bad magic (not a CAFM bundle)");
    const std::uint32_t version = hr.u32();
    if (version != kBundleVersion) fail(ErrorCode::kBundleFormat, "unsupported bundle version " + std::to_string(version));
    const std::uint32_t len = hr.u32();
    if (12 + static_cast<std::uint64_t>(len) > file_size_) fail(ErrorCode::kBundleTruncated, "manifest runs past the end");
    auto text = read_range(12, len);
    try {
      detail::parse_manifest(nlohmann::json::parse(text.begin(), text.end()), info_);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::kBundleFormat, std::string("manifest is not valid JSON: ") + e.what());
    }
    arch_ = make_architecture(info_.backbone_config);
    const std::uint64_t sections = static_cast<std::uint64_t>(info_.manifest.n) + 1;
    if (file_size_ < 12 + len + 4 + 8 * sections) fail(ErrorCode::kBundleTruncated, "offset trailer missing");
    trailer_start_ = file_size_ - 8 * sections;
    auto trailer = read_range(trailer_start_, 8 * sections);
    detail::ByteReader tr(trailer.data(), trailer.size());
    for (std::uint64_t i = 0; i < sections; ++i) offsets_.push_back(tr.u64());
    for (std::size_t i = 0; i < offsets_.size(); ++i) {
      const std::uint64_t end = section_end(i);
      if (offsets_[i] < 12 + len + 4 || offsets_[i] >= end || end > trailer_start_)
        fail(ErrorCode::kBundleFormat, "offset table is inconsistent");
    }
  }

  const BundleManifest& manifest() const { return info_.manifest; }
  const BackboneConfig& backbone_config() const { return info_.backbone_config; }
  std::uint64_t file_size() const { return file_size_; }
  const std::vector<Access>& accesses() const { return accesses_; }
  void clear_accesses() { accesses_.clear(); }

  /// Byte span [start, end) of section i (0 shared, i+1 chunk i).
  std::pair<std::uint64_t, std::uint64_t> section_span(std::size_t i) const { return {offsets_.at(i), section_end(i)}; }

  BackboneParams<float> load_shared() {
    auto records = read_section(0);
    auto params = zero_backbone<float>(arch_);
    if (records.size() != params.tensors.size()) fail(ErrorCode::kBundleShape, "shared section tensor count mismatch");
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i].name != params.tensors[i].name || records[i].tensor.shape() != params.tensors[i].tensor.shape())
        fail(ErrorCode::kBundleShape, "shared tensor '" + records[i].name + "' does not match the manifest");
      params.tensors[i].tensor = std::move(records[i].tensor);
    }
    return params;
  }

  CaFMSet<float> load_chunk(int chunk) {
    if (chunk < 0 || chunk >= info_.manifest.n)
      fail(ErrorCode::kRange, "chunk " + std::to_string(chunk) + " not in bundle with " +
                                  std::to_string(info_.manifest.n) + " CaFM sets");
    auto records = read_section(static_cast<std::size_t>(chunk) + 1);
    return detail::cafm_from_records(arch_, records, chunk, info_.manifest.kernel);
  }

 private:
  std::uint64_t section_end(std::size_t i) const {
    return i + 1 < offsets_.size() ? offsets_[i + 1] : trailer_start_;
  }

  std::vector<std::uint8_t> read_range(std::uint64_t offset, std::uint64_t length) {
    std::vector<std::uint8_t> buf(length);
    in_.clear();
    in_.seekg(static_cast<std::streamoff>(offset));
    in_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(length));
    if (static_cast<std::uint64_t>(in_.gcount()) != length) fail(ErrorCode::kBundleTruncated, "short read");
    accesses_.push_back({offset, length});
    return buf;
  }

  std::vector<detail::TensorRecord> read_section(std::size_t i) {
    const auto [start, end] = section_span(i);
    auto bytes = read_range(start, end - start);
    detail::ByteReader r(bytes.data(), bytes.size(), start);
    std::vector<detail::TensorRecord> out;
    while (r.remaining() > 0) {
      auto rec = detail::read_tensor(r);
      if (rec.section != i) fail(ErrorCode::kBundleFormat, "tensor '" + rec.name + "' has the wrong section tag");
      out.push_back(std::move(rec));
    }
    return out;
  }

  std::filesystem::path path_;
  std::ifstream in_;
  std::uint64_t file_size_ = 0;
  std::uint64_t trailer_start_ = 0;
  ModelBundle info_;
  Architecture arch_;
  std::vector<std::uint64_t> offsets_;
  std::vector<Access> accesses_;
};

// ---------------------------------------------------------------------------
// Storage accounting

struct StorageReport {
  std::uint64_t lr_video_bytes = 0;
  /// Everything in the bundle file outside the chunk sections (header,
  /// manifest, shared weights, offset table).
  std::uint64_t shared_bytes = 0;
  std::vector<std::uint64_t> per_chunk_cafm_bytes;
  std::uint64_t total_bytes = 0;
};

inline StorageReport storage_report(const std::filesystem::path& bundle_path,
                                    const std::vector<std::filesystem::path>& lr_video_files) {
  StorageReport rep;
  for (const auto& f : lr_video_files) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(f, ec);
    if (ec) fail(ErrorCode::kIo, "cannot stat '" + f.string() + "'");
    rep.lr_video_bytes += size;
  }
  BundleReader reader(bundle_path);
  std::uint64_t chunks = 0;
  for (int i = 0; i < reader.manifest().n; ++i) {
    const auto [s, e] = reader.section_span(static_cast<std::size_t>(i) + 1);
    rep.per_chunk_cafm_bytes.push_back(e - s);
    chunks += e - s;
  }
  rep.shared_bytes = reader.file_size() - chunks;
  rep.total_bytes = rep.lr_video_bytes + rep.shared_bytes + chunks;
  return rep;
}

/// Raw parameter payload of one modulation set (4 bytes per value).
inline std::uint64_t cafm_payload_bytes(const CaFMSet<float>& set) { return 4 * set.param_count(); }
inline std::uint64_t shared_payload_bytes(const BackboneParams<float>& p) { return 4 * count_params(p); }

// ---------------------------------------------------------------------------
// Client-side reconstruction

/// Super-resolves the LR frames of one chunk with the shared backbone and
/// that chunk's modulation set (plain backbone when the bundle has none).
inline std::vector<FrameTensor> reconstruct_chunk(const ModelBundle& b, int chunk_index,
                                                  const std::vector<FrameTensor>& lr_frames) {
  const CaFMSet<float>* cafm = nullptr;
  if (!b.cafms.empty()) {
    if (chunk_index < 0 || static_cast<std::size_t>(chunk_index) >= b.cafms.size())
      fail(ErrorCode::kRange, "chunk " + std::to_string(chunk_index) + " out of range");
    cafm = &b.cafms[static_cast<std::size_t>(chunk_index)];
  }
  std::vector<FrameTensor> out;
  out.reserve(lr_frames.size());
  for (const auto& f : lr_frames) out.push_back(super_resolve(b.shared, cafm, f));
  return out;
}

/// Same, fetching only the shared section and the chunk's own section.
inline std::vector<FrameTensor> reconstruct_chunk(BundleReader& reader, int chunk_index,
                                                  const std::vector<FrameTensor>& lr_frames) {
  const auto shared = reader.load_shared();
  std::optional<CaFMSet<float>> cafm;
  if (reader.manifest().n > 0) cafm = reader.load_chunk(chunk_index);
  std::vector<FrameTensor> out;
  out.reserve(lr_frames.size());
  for (const auto& f : lr_frames) out.push_back(super_resolve(shared, cafm ? &*cafm : nullptr, f));
  return out;
}

/// Whole-video reconstruction in manifest chunk order.
inline std::vector<FrameTensor> reconstruct_video(const ModelBundle& b, const std::vector<FrameTensor>& lr_frames) {
  if (b.manifest.chunk_ranges.empty()) return reconstruct_chunk(b, 0, lr_frames);
  std::vector<FrameTensor> out;
  out.reserve(lr_frames.size());
  for (const auto& c : b.manifest.chunk_ranges) {
    if (c.end > lr_frames.size()) fail(ErrorCode::kRange, "chunk range beyond the supplied frames");
    const std::vector<FrameTensor> part(lr_frames.begin() + static_cast<std::ptrdiff_t>(c.start),
                                        lr_frames.begin() + static_cast<std::ptrdiff_t>(c.end));
    auto sr = reconstruct_chunk(b, b.cafms.empty() ? 0 : c.chunk_index, part);
    out.insert(out.end(), std::make_move_iterator(sr.begin()), std::make_move_iterator(sr.end()));
  }
  if (out.size() != lr_frames.size()) fail(ErrorCode::kRange, "chunk ranges do not cover the video");
  return out;
}

/// Bundle for a trained model; n is the number of CaFM sets it carries.
inline ModelBundle make_bundle(const BackboneParams<float>& shared, std::vector<CaFMSet<float>> cafms,
                               const std::string& mode, int kernel, std::vector<ChunkSpec> ranges) {
  ModelBundle b;
  b.backbone_config = shared.config();
  b.shared = shared;
  b.cafms = std::move(cafms);
  b.manifest.mode = mode;
  b.manifest.scale = shared.config().scale;
  b.manifest.n = static_cast<int>(b.cafms.size());
  b.manifest.kernel = kernel;
  b.manifest.chunk_ranges = std::move(ranges);
  return b;
}

}  // namespace cafm
