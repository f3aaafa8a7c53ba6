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

// Bitrate-matched classical codec baseline.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cafm/evaluation.hpp"
#include "cafm/image_io.hpp"
#include "cafm/media.hpp"
#include "cafm/metrics.hpp"
#include "cafm/process.hpp"

namespace cafm {

enum class Codec { kH264, kH265 };

inline const char* to_string(Codec c) { return c == Codec::kH264 ? "h264" : "h265"; }

inline Codec parse_codec(const std::string& s) {
  if (s == "h264") return Codec::kH264;
  if (s == "h265" || s == "hevc") return Codec::kH265;
  fail(ErrorCode::kConfig, "unknown codec '" + s + "'");
}

/// An encoder that can hit a target average bitrate.
class Encoder {
 public:
  virtual ~Encoder() = default;
  /// Encodes `video` at `kbps` into `out`; returns the file size in bytes.
  virtual std::uint64_t encode(const VideoAsset& video, double kbps, const std::filesystem::path& out) = 0;
  virtual VideoAsset decode(const std::filesystem::path& file) = 0;
};

/// System ffmpeg, two-pass ABR with a pinned preset.
class FfmpegEncoder : public Encoder {
 public:
  static constexpr const char* kPreset = "medium";

  explicit FfmpegEncoder(Codec codec, std::function<void(const std::string&)> log = {})
      : codec_(codec), log_(std::move(log)) {
    auto exe = find_executable("ffmpeg");
    if (!exe) fail(ErrorCode::kEnvironment, "ffmpeg not found on PATH");
    exe_ = exe->string();
  }

  static bool available() { return find_executable("ffmpeg").has_value(); }

  std::uint64_t encode(const VideoAsset& video, double kbps, const std::filesystem::path& out) override {
    namespace fs = std::filesystem;
    const fs::path work = out.parent_path() / (out.stem().string() + "_frames");
    std::error_code ec;
    fs::remove_all(work, ec);
    fs::create_directories(work);
    for (std::size_t i = 0; i < video.frames.size(); ++i) write_png(work / frame_filename(i), frame_to_image(video.frames[i]));
    const std::string rate = std::to_string(static_cast<long long>(std::max(1.0, kbps) * 1000.0));
    const std::string lib = codec_ == Codec::kH264 ? "libx264" : "libx265";
    const std::string passlog = (work / "pass").string();
    std::vector<std::string> common = {exe_, "-y", "-v", "error", "-framerate", std::to_string(video.fps),
                                       "-i", (work / "%06d.png").string(), "-c:v", lib, "-preset", kPreset,
                                       "-b:v", rate, "-pix_fmt", "yuv444p"};
    if (codec_ == Codec::kH264) {
      auto p1 = common;
      p1.insert(p1.end(), {"-pass", "1", "-passlogfile", passlog, "-f", "null", "/dev/null"});
      auto p2 = common;
      p2.insert(p2.end(), {"-pass", "2", "-passlogfile", passlog, out.string()});
      if (run_command(p1, log_) != 0 || run_command(p2, log_) != 0) fail(ErrorCode::kEnvironment, "encoder failed");
    } else {
      const std::string stats = "stats=" + passlog + ".x265";
      auto p1 = common;
      p1.insert(p1.end(), {"-x265-params", "pass=1:" + stats, "-f", "null", "/dev/null"});
      auto p2 = common;
      p2.insert(p2.end(), {"-x265-params", "pass=2:" + stats, out.string()});
      if (run_command(p1, log_) != 0 || run_command(p2, log_) != 0) fail(ErrorCode::kEnvironment, "encoder failed");
    }
    fs::remove_all(work, ec);
    return fs::file_size(out);
  }

  VideoAsset decode(const std::filesystem::path& file) override { return decode_frames(file); }

 private:
  Codec codec_;
  std::function<void(const std::string&)> log_;
  std::string exe_;
};

struct RateProbe {
  double kbps = 0.0;
  std::uint64_t bytes = 0;
};

struct RateMatch {
  double kbps = 0.0;
  std::uint64_t bytes = 0;
  std::filesystem::path file;
  std::vector<RateProbe> probes;
};

inline constexpr int kMaxRateProbes = 8;
inline constexpr double kMinKbps = 1.0;

/// Finds a bitrate whose encoded size lies in [0.95, 1.0] x budget by
/// bisection over the target bitrate. Probes are written to `out`.
inline RateMatch match_rate(Encoder& enc, const VideoAsset& video, std::uint64_t budget_bytes,
                            const std::filesystem::path& out) {
  if (video.frames.empty()) fail(ErrorCode::kEmptyInput, "no frames to encode");
  const double lower_ok = 0.95 * static_cast<double>(budget_bytes);
  RateMatch m;
  auto probe = [&](double kbps) {
    const auto bytes = enc.encode(video, kbps, out);
    m.probes.push_back({kbps, bytes});
    return bytes;
  };
  auto accept = [&](double kbps, std::uint64_t bytes) {
    m.kbps = kbps;
    m.bytes = bytes;
    m.file = out;
  };

  const std::uint64_t floor_bytes = probe(kMinKbps);
  if (floor_bytes > budget_bytes)
    throw RateError("budget of " + std::to_string(budget_bytes) + " bytes is below the codec floor of " +
                        std::to_string(floor_bytes) + " bytes",
                    floor_bytes);
  if (static_cast<double>(floor_bytes) >= lower_ok) {
    accept(kMinKbps, floor_bytes);
    return m;
  }

  const double seconds = static_cast<double>(video.frames.size()) / video.fps;
  double lo = kMinKbps;
  double hi = std::max(2.0 * kMinKbps, 2.0 * static_cast<double>(budget_bytes) * 8.0 / 1000.0 / seconds);
  std::optional<RateProbe> best;
  double mid = static_cast<double>(budget_bytes) * 8.0 / 1000.0 / seconds;
  while (static_cast<int>(m.probes.size()) < kMaxRateProbes) {
    mid = std::clamp(mid, lo, hi);
    const auto bytes = probe(mid);
    if (bytes <= budget_bytes) {
      if (!best || bytes > best->bytes) best = RateProbe{mid, bytes};
      if (static_cast<double>(bytes) >= lower_ok) {
        accept(mid, bytes);
        return m;
      }
      lo = mid;
    } else {
      hi = mid;
    }
    mid = 0.5 * (lo + hi);
  }
  if (best) {
    // Re-emit the best in-budget probe so the file on disk matches.
    const auto bytes = enc.encode(video, best->kbps, out);
    if (static_cast<double>(bytes) >= lower_ok && bytes <= budget_bytes) {
      accept(best->kbps, bytes);
      return m;
    }
  }
  throw RateError("no bitrate within " + std::to_string(kMaxRateProbes) + " probes lands in [0.95, 1.0] x " +
                      std::to_string(budget_bytes) + " bytes",
                  floor_bytes);
}

/// Rate-matches `video`, decodes the result and scores it against the source.
inline EvalReport codec_baseline(Encoder& enc, const VideoAsset& video, const std::vector<ChunkSpec>& chunks,
                                 std::uint64_t budget_bytes, const std::string& label,
                                 const std::filesystem::path& out, PsnrSpace space = PsnrSpace::kRgb,
                                 RateMatch* match = nullptr) {
  auto m = match_rate(enc, video, budget_bytes, out);
  const auto decoded = enc.decode(m.file);
  if (decoded.frames.size() != video.frames.size()) fail(ErrorCode::kEval, "decoded frame count differs from source");
  EvalReport r;
  r.mode = label;
  r.scale = 1;
  for (const auto& c : chunks) {
    std::vector<double> frames;
    for (std::size_t f = c.start; f < c.end; ++f) frames.push_back(psnr(video.frames[f], decoded.frames[f], space));
    r.frame_psnr.push_back(std::move(frames));
  }
  detail::finish_report(r);
  StorageReport s;
  s.lr_video_bytes = m.bytes;
  s.total_bytes = m.bytes;
  r.storage = s;
  if (match) *match = std::move(m);
  return r;
}

}  // namespace cafm
