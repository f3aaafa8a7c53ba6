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

// Video frames, bicubic degradation, chunking and patch sampling.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cafm/common.hpp"
#include "cafm/image_io.hpp"
#include "cafm/process.hpp"
#include "cafm/tensor.hpp"

namespace cafm {

/// One RGB frame, interleaved H×W×3, values in [0,1].
struct FrameTensor {
  int height = 0;
  int width = 0;
  std::vector<float> data;

  FrameTensor() = default;
  FrameTensor(int h, int w, float fill = 0.0f)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, fill) {
    if (h < 1 || w < 1) fail(ErrorCode::kShape, "frame must be at least 1x1");
  }

  float& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  bool valid() const {
    return height >= 1 && width >= 1 && data.size() == static_cast<std::size_t>(height) * width * 3 &&
           std::all_of(data.begin(), data.end(),
                       [](float v) { return std::isfinite(v) && v >= 0.0f && v <= 1.0f; });
  }

  friend bool operator==(const FrameTensor&, const FrameTensor&) = default;
};

inline FrameTensor frame_from_image(const Image8& img) {
  FrameTensor f(img.height, img.width);
  for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] = static_cast<float>(img.pixels[i]) / 255.0f;
  return f;
}

inline Image8 frame_to_image(const FrameTensor& f) {
  Image8 img;
  img.width = f.width;
  img.height = f.height;
  img.channels = 3;
  img.pixels.resize(f.data.size());
  for (std::size_t i = 0; i < f.data.size(); ++i) img.pixels[i] = quantize_unit(f.data[i]);
  return img;
}

/// (3, H, W) planar view for the networks.
template <typename T>
Tensor<T> frame_to_chw(const FrameTensor& f) {
  Tensor<T> t({3, static_cast<std::size_t>(f.height), static_cast<std::size_t>(f.width)});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < f.height; ++y)
      for (int x = 0; x < f.width; ++x) t.at(c, y, x) = static_cast<T>(f.at(y, x, c));
  return t;
}

/// Converts back to a frame, clamping to [0,1].
template <typename T>
FrameTensor chw_to_frame(const Tensor<T>& t) {
  if (t.ndim() != 3 || t.dim(0) != 3) fail(ErrorCode::kShape, "expected a (3,H,W) tensor, got " + shape_string(t.shape()));
  FrameTensor f(static_cast<int>(t.dim(1)), static_cast<int>(t.dim(2)));
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < f.height; ++y)
      for (int x = 0; x < f.width; ++x) f.at(y, x, c) = std::clamp(static_cast<float>(t.at(c, y, x)), 0.0f, 1.0f);
  return f;
}

struct VideoAsset {
  std::vector<FrameTensor> frames;
  double fps = 30.0;
  std::string source_id;

  std::size_t frame_count() const { return frames.size(); }
};

struct ChunkSpec {
  int chunk_index = 0;
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive

  std::size_t length() const { return end - start; }
  friend bool operator==(const ChunkSpec&, const ChunkSpec&) = default;
};

enum class DatasetRole { kTrain, kTest };

struct FramePair {
  std::shared_ptr<const FrameTensor> lr;
  std::shared_ptr<const FrameTensor> hr;
};

/// LR/HR pairs of one chunk. Immutable after construction; the frame buffers
/// are shared between the train and test views of the same chunk.
struct ChunkDataset {
  int chunk_index = 0;
  int scale = 2;
  DatasetRole role = DatasetRole::kTrain;
  std::vector<FramePair> pairs;
  std::vector<std::size_t> frame_indices;  // source frame index of each pair

  std::size_t sample_count() const { return pairs.size(); }
};

inline void check_scale(int s) {
  if (s < 2 || s > 4) fail(ErrorCode::kInvalidScale, "scale must be 2, 3 or 4 (got " + std::to_string(s) + ")");
}

// ---------------------------------------------------------------------------
// Bicubic resampling

namespace detail {

/// Cubic convolution kernel with a = -0.5.
inline double cubic(double x) {
  const double ax = std::abs(x);
  const double ax2 = ax * ax;
  const double ax3 = ax2 * ax;
  if (ax <= 1.0) return 1.5 * ax3 - 2.5 * ax2 + 1.0;
  if (ax <= 2.0) return -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0;
  return 0.0;
}

/// Symmetric (edge-repeating) reflection into [0, n).
inline int reflect_index(long i, long n) {
  const long period = 2 * n;
  long m = i % period;
  if (m < 0) m += period;
  return static_cast<int>(m < n ? m : period - 1 - m);
}

struct ResampleTaps {
  std::vector<int> index;     // out_len × taps
  std::vector<double> weight;  // out_len × taps
  int taps = 0;
};

/// Taps for resizing a length-`in_len` axis by `scale` (out/in). When
/// shrinking, the kernel is stretched by 1/scale for anti-aliasing.
inline ResampleTaps resample_taps(int in_len, int out_len, double scale) {
  const bool shrink = scale < 1.0;
  const double kernel_width = shrink ? 4.0 / scale : 4.0;
  ResampleTaps t;
  t.taps = static_cast<int>(std::ceil(kernel_width)) + 2;
  t.index.resize(static_cast<std::size_t>(out_len) * t.taps);
  t.weight.resize(t.index.size());
  for (int i = 0; i < out_len; ++i) {
    const double center = (i + 0.5) / scale - 0.5;
    const long left = static_cast<long>(std::floor(center - kernel_width / 2.0));
    double sum = 0.0;
    for (int p = 0; p < t.taps; ++p) {
      const long j = left + p;
      const double d = center - static_cast<double>(j);
      const double w = shrink ? scale * cubic(scale * d) : cubic(d);
      t.index[static_cast<std::size_t>(i) * t.taps + p] = reflect_index(j, in_len);
      t.weight[static_cast<std::size_t>(i) * t.taps + p] = w;
      sum += w;
    }
    for (int p = 0; p < t.taps; ++p) t.weight[static_cast<std::size_t>(i) * t.taps + p] /= sum;
  }
  return t;
}

}  // namespace detail

/// Separable bicubic resize of a (C, H, W) tensor to (C, out_h, out_w).
/// Rows are resampled first, then columns; no clamping.
template <typename T>
Tensor<T> bicubic_resize_chw(const Tensor<T>& in, std::size_t out_h, std::size_t out_w) {
  const std::size_t channels = in.dim(0), h = in.dim(1), w = in.dim(2);
  const auto ty = detail::resample_taps(static_cast<int>(h), static_cast<int>(out_h),
                                        static_cast<double>(out_h) / static_cast<double>(h));
  const auto tx = detail::resample_taps(static_cast<int>(w), static_cast<int>(out_w),
                                        static_cast<double>(out_w) / static_cast<double>(w));
  std::vector<double> mid(channels * out_h * w);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t y = 0; y < out_h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int p = 0; p < ty.taps; ++p) {
          const std::size_t k = y * ty.taps + p;
          acc += ty.weight[k] * static_cast<double>(in.at(c, ty.index[k], x));
        }
        mid[(c * out_h + y) * w + x] = acc;
      }
  Tensor<T> out({channels, out_h, out_w});
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t y = 0; y < out_h; ++y)
      for (std::size_t x = 0; x < out_w; ++x) {
        double acc = 0.0;
        for (int p = 0; p < tx.taps; ++p) {
          const std::size_t k = x * tx.taps + p;
          acc += tx.weight[k] * mid[(c * out_h + y) * w + tx.index[k]];
        }
        out.at(c, y, x) = static_cast<T>(acc);
      }
  return out;
}

/// Center-crops so both sides are multiples of s.
inline FrameTensor crop_to_multiple(const FrameTensor& f, int s) {
  const int h = f.height - f.height % s;
  const int w = f.width - f.width % s;
  if (h < s || w < s) fail(ErrorCode::kShape, "frame smaller than the scale factor");
  if (h == f.height && w == f.width) return f;
  const int oy = (f.height % s) / 2, ox = (f.width % s) / 2;
  FrameTensor out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = f.at(y + oy, x + ox, c);
  return out;
}

inline FrameTensor bicubic_downscale(const FrameTensor& frame, int s) {
  check_scale(s);
  const FrameTensor hr = crop_to_multiple(frame, s);
  const auto lr = bicubic_resize_chw(frame_to_chw<double>(hr), static_cast<std::size_t>(hr.height / s),
                                     static_cast<std::size_t>(hr.width / s));
  return chw_to_frame(lr);
}

inline FrameTensor bicubic_upscale(const FrameTensor& frame, int s) {
  check_scale(s);
  const auto up = bicubic_resize_chw(frame_to_chw<double>(frame), static_cast<std::size_t>(frame.height) * s,
                                     static_cast<std::size_t>(frame.width) * s);
  return chw_to_frame(up);
}

// ---------------------------------------------------------------------------
// Decoding

namespace detail {

inline bool has_png_extension(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png";
}

inline std::vector<std::filesystem::path> list_png_frames(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && has_png_extension(entry.path())) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

inline VideoAsset decode_png_sequence(const std::vector<std::filesystem::path>& files,
                                      std::optional<std::size_t> limit, std::string source_id) {
  VideoAsset video;
  video.source_id = std::move(source_id);
  const std::size_t count = limit ? std::min(*limit, files.size()) : files.size();
  for (std::size_t i = 0; i < count; ++i) {
    FrameTensor f = frame_from_image(read_png(files[i]));
    if (!video.frames.empty() && (f.height != video.frames[0].height || f.width != video.frames[0].width))
      fail(ErrorCode::kDecode, "frame '" + files[i].string() + "' has a different size from frame 0");
    video.frames.push_back(std::move(f));
  }
  if (video.frames.empty()) fail(ErrorCode::kEmptyInput, "no frames in '" + video.source_id + "'");
  return video;
}

}  // namespace detail

/// Decodes a directory of numbered PNG frames, a single PNG, or (through the
/// system ffmpeg) any video container. Frames come out in presentation order.
inline VideoAsset decode_frames(const std::filesystem::path& path, std::optional<std::size_t> limit = std::nullopt) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::exists(path, ec)) fail(ErrorCode::kDecode, "'" + path.string() + "' does not exist");
  if (fs::is_directory(path, ec))
    return detail::decode_png_sequence(detail::list_png_frames(path), limit, path.string());
  if (detail::has_png_extension(path)) return detail::decode_png_sequence({path}, limit, path.string());
  if (fs::file_size(path, ec) == 0) fail(ErrorCode::kEmptyInput, "'" + path.string() + "' is empty");

  const auto ffmpeg = find_executable("ffmpeg");
  if (!ffmpeg) fail(ErrorCode::kDecode, "cannot decode '" + path.string() + "': ffmpeg not found on PATH");
  const fs::path tmp = fs::temp_directory_path() / ("cafm_decode_" + std::to_string(std::hash<std::string>{}(path.string())));
  fs::remove_all(tmp, ec);
  fs::create_directories(tmp);
  std::vector<std::string> argv = {ffmpeg->string(), "-y", "-v", "error", "-i", path.string()};
  if (limit) {
    argv.push_back("-frames:v");
    argv.push_back(std::to_string(*limit));
  }
  argv.push_back("-pix_fmt");
  argv.push_back("rgb24");
  argv.push_back((tmp / "%06d.png").string());
  if (run_command(argv) != 0) {
    fs::remove_all(tmp, ec);
    fail(ErrorCode::kDecode, "ffmpeg could not decode '" + path.string() + "'");
  }
  auto video = detail::decode_png_sequence(detail::list_png_frames(tmp), limit, path.string());
  fs::remove_all(tmp, ec);
  return video;
}

// ---------------------------------------------------------------------------
// Chunking and datasets

/// Contiguous near-equal partition; the first (N mod n) chunks get one extra frame.
inline std::vector<ChunkSpec> split_chunks(std::size_t frame_count, int n) {
  if (n < 1 || static_cast<std::size_t>(n) > frame_count)
    fail(ErrorCode::kInvalidChunking,
         "chunk count " + std::to_string(n) + " not in [1, " + std::to_string(frame_count) + "]");
  std::vector<ChunkSpec> chunks;
  const std::size_t base = frame_count / n, extra = frame_count % n;
  std::size_t start = 0;
  for (int i = 0; i < n; ++i) {
    const std::size_t len = base + (static_cast<std::size_t>(i) < extra ? 1 : 0);
    chunks.push_back({i, start, start + len});
    start += len;
  }
  return chunks;
}

inline std::vector<ChunkSpec> split_chunks(const VideoAsset& video, int n) {
  return split_chunks(video.frame_count(), n);
}

struct DatasetSplit {
  std::vector<ChunkDataset> train;
  std::vector<ChunkDataset> test;
};

/// Train sets hold every frame of the chunk; test sets hold every
/// test_stride-th frame starting at the chunk's first frame.
inline DatasetSplit build_datasets(const VideoAsset& video, const std::vector<ChunkSpec>& chunks, int s,
                                   int test_stride = 10) {
  check_scale(s);
  if (test_stride < 1) fail(ErrorCode::kInvalidChunking, "test stride must be >= 1");
  std::size_t expected = 0;
  for (const auto& c : chunks) {
    if (c.start != expected || c.end <= c.start || c.end > video.frame_count())
      fail(ErrorCode::kInvalidChunking, "chunk ranges do not partition the video");
    expected = c.end;
  }
  if (expected != video.frame_count()) fail(ErrorCode::kInvalidChunking, "chunk ranges do not cover the video");

  DatasetSplit split;
  for (const auto& c : chunks) {
    ChunkDataset train{c.chunk_index, s, DatasetRole::kTrain, {}, {}};
    ChunkDataset test{c.chunk_index, s, DatasetRole::kTest, {}, {}};
    for (std::size_t f = c.start; f < c.end; ++f) {
      auto hr = std::make_shared<const FrameTensor>(crop_to_multiple(video.frames[f], s));
      auto lr = std::make_shared<const FrameTensor>(bicubic_downscale(*hr, s));
      train.pairs.push_back({lr, hr});
      train.frame_indices.push_back(f);
      if ((f - c.start) % static_cast<std::size_t>(test_stride) == 0) {
        test.pairs.push_back({lr, hr});
        test.frame_indices.push_back(f);
      }
    }
    split.train.push_back(std::move(train));
    split.test.push_back(std::move(test));
  }
  return split;
}

/// All chunks' pairs in one dataset (the single-model regime).
inline ChunkDataset merge_datasets(const std::vector<ChunkDataset>& parts) {
  if (parts.empty()) fail(ErrorCode::kEmptyInput, "no datasets to merge");
  ChunkDataset merged{0, parts.front().scale, parts.front().role, {}, {}};
  for (const auto& d : parts) {
    merged.pairs.insert(merged.pairs.end(), d.pairs.begin(), d.pairs.end());
    merged.frame_indices.insert(merged.frame_indices.end(), d.frame_indices.begin(), d.frame_indices.end());
  }
  return merged;
}

struct PatchPair {
  Tensor<float> lr;  // (3, p, p)
  Tensor<float> hr;  // (3, p*s, p*s)
  std::size_t pair_index = 0;
  int lr_y = 0, lr_x = 0;
  int hr_y = 0, hr_x = 0;
};

namespace detail {

inline Tensor<float> crop_chw(const FrameTensor& f, int y0, int x0, int size) {
  Tensor<float> t({3, static_cast<std::size_t>(size), static_cast<std::size_t>(size)});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) t.at(c, y, x) = f.at(y0 + y, x0 + x, c);
  return t;
}

}  // namespace detail

/// One aligned LR/HR patch drawn from a random frame of `dataset`.
inline PatchPair sample_patch(const ChunkDataset& dataset, int patch_lr, Rng& rng) {
  if (dataset.pairs.empty()) fail(ErrorCode::kEmptyInput, "dataset has no samples");
  const int s = dataset.scale;
  const std::size_t idx = rng.below(dataset.pairs.size());
  const auto& pair = dataset.pairs[idx];
  if (patch_lr < 1 || patch_lr * s > std::min(pair.hr->height, pair.hr->width))
    fail(ErrorCode::kInvalidPatch, "LR patch of " + std::to_string(patch_lr) + " px does not fit the frame");
  PatchPair p;
  p.pair_index = idx;
  p.lr_y = static_cast<int>(rng.below(static_cast<std::uint64_t>(pair.lr->height - patch_lr + 1)));
  p.lr_x = static_cast<int>(rng.below(static_cast<std::uint64_t>(pair.lr->width - patch_lr + 1)));
  p.hr_y = p.lr_y * s;
  p.hr_x = p.lr_x * s;
  p.lr = detail::crop_chw(*pair.lr, p.lr_y, p.lr_x, patch_lr);
  p.hr = detail::crop_chw(*pair.hr, p.hr_y, p.hr_x, patch_lr * s);
  return p;
}

inline std::vector<PatchPair> sample_patch_batch(const ChunkDataset& dataset, int batch, int patch_lr, Rng& rng) {
  if (batch < 1) fail(ErrorCode::kInvalidPatch, "batch must be >= 1");
  std::vector<PatchPair> out;
  out.reserve(static_cast<std::size_t>(batch));
  for (int b = 0; b < batch; ++b) out.push_back(sample_patch(dataset, patch_lr, rng));
  return out;
}

inline std::vector<PatchPair> sample_patch_batch(const ChunkDataset& dataset, int batch, int patch_lr,
                                                 std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  return sample_patch_batch(dataset, batch, patch_lr, rng);
}

// ---------------------------------------------------------------------------
// On-disk cache and chunk manifest

struct ChunkManifest {
  int n = 1;
  int scale = 2;
  int test_stride = 10;
  std::vector<ChunkSpec> ranges;
};

inline nlohmann::json to_json(const ChunkManifest& m) {
  nlohmann::json ranges = nlohmann::json::array();
  for (const auto& c : m.ranges) ranges.push_back({c.start, c.end});
  return {{"n", m.n}, {"scale", m.scale}, {"test_stride", m.test_stride}, {"ranges", ranges}};
}

inline ChunkManifest chunk_manifest_from_json(const nlohmann::json& j) {
  try {
    ChunkManifest m;
    m.n = j.at("n").get<int>();
    m.scale = j.at("scale").get<int>();
    m.test_stride = j.at("test_stride").get<int>();
    int i = 0;
    for (const auto& r : j.at("ranges")) m.ranges.push_back({i++, r.at(0).get<std::size_t>(), r.at(1).get<std::size_t>()});
    if (static_cast<int>(m.ranges.size()) != m.n) fail(ErrorCode::kInvalidChunking, "manifest n does not match ranges");
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kDecode, std::string("malformed chunk manifest: ") + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) fail(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline std::string frame_filename(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu.png", index);
  return buf;
}

/// Writes <workdir>/hr/%06d.png, <workdir>/lrx{s}/%06d.png and chunks.json.
inline ChunkManifest write_cache(const std::filesystem::path& workdir, const VideoAsset& video, int s, int n,
                                 int test_stride) {
  check_scale(s);
  const auto chunks = split_chunks(video, n);
  const auto hr_dir = workdir / "hr";
  const auto lr_dir = workdir / ("lrx" + std::to_string(s));
  std::filesystem::create_directories(hr_dir);
  std::filesystem::create_directories(lr_dir);
  for (std::size_t i = 0; i < video.frame_count(); ++i) {
    const FrameTensor hr = crop_to_multiple(video.frames[i], s);
    write_png(hr_dir / frame_filename(i), frame_to_image(hr));
    write_png(lr_dir / frame_filename(i), frame_to_image(bicubic_downscale(hr, s)));
  }
  ChunkManifest m{n, s, test_stride, chunks};
  write_text_file(workdir / "chunks.json", to_json(m).dump(2) + "\n");
  return m;
}

inline ChunkManifest read_chunk_manifest(const std::filesystem::path& workdir) {
  const auto path = workdir / "chunks.json";
  if (!std::filesystem::exists(path)) fail(ErrorCode::kIo, "no chunks.json in '" + workdir.string() + "' (run prepare first)");
  try {
    return chunk_manifest_from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kDecode, std::string("chunks.json: ") + e.what());
  }
}

/// Rebuilds train/test datasets from the cached 8-bit frames.
inline DatasetSplit load_cached_datasets(const std::filesystem::path& workdir, const ChunkManifest& m) {
  const auto hr = detail::list_png_frames(workdir / "hr");
  const auto lr = detail::list_png_frames(workdir / ("lrx" + std::to_string(m.scale)));
  if (hr.empty() || hr.size() != lr.size()) fail(ErrorCode::kEmptyInput, "frame cache is empty or inconsistent");
  DatasetSplit split;
  for (const auto& c : m.ranges) {
    if (c.end > hr.size()) fail(ErrorCode::kInvalidChunking, "chunk range beyond cached frames");
    ChunkDataset train{c.chunk_index, m.scale, DatasetRole::kTrain, {}, {}};
    ChunkDataset test{c.chunk_index, m.scale, DatasetRole::kTest, {}, {}};
    for (std::size_t f = c.start; f < c.end; ++f) {
      auto hr_f = std::make_shared<const FrameTensor>(frame_from_image(read_png(hr[f])));
      auto lr_f = std::make_shared<const FrameTensor>(frame_from_image(read_png(lr[f])));
      if (hr_f->height != lr_f->height * m.scale || hr_f->width != lr_f->width * m.scale)
        fail(ErrorCode::kShape, "cached LR/HR sizes disagree with scale");
      train.pairs.push_back({lr_f, hr_f});
      train.frame_indices.push_back(f);
      if ((f - c.start) % static_cast<std::size_t>(m.test_stride) == 0) {
        test.pairs.push_back({lr_f, hr_f});
        test.frame_indices.push_back(f);
      }
    }
    split.train.push_back(std::move(train));
    split.test.push_back(std::move(test));
  }
  return split;
}

}  // namespace cafm
