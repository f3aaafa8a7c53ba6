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

// Workdir-level commands: prepare, train, pack, inspect, reconstruct,
// report, analyze, codec-compare.
//
// Workdir layout:
//   chunks.json  hr/  lrx{s}/       frame cache
//   arch.json                       backbone manifest
//   models/<mode>.bundle            trained models (separate_<i>.bundle per chunk)
//   logs/train_<model>.csv          iter,loss,psnr_mean (<model> is <mode> or <mode>_c<i>)
//   ckpt/<model>/ckpt_<iter>.bundle periodic checkpoints, optimizer state in .adam
//   delivery/<mode>.bundle          packed delivery artifact
//   report.csv                      evaluation table
//   analysis/                       distances.csv and heatmaps

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cafm/bundle.hpp"
#include "cafm/codec.hpp"
#include "cafm/evaluation.hpp"
#include "cafm/feature_analysis.hpp"
#include "cafm/media.hpp"
#include "cafm/synthetic.hpp"
#include "cafm/trainer.hpp"

namespace cafm {

struct RunConfig {
  std::filesystem::path workdir = "work";
  std::uint64_t seed = 0;

  // media
  std::string input;  // video file, PNG directory, or "synthetic"
  std::size_t max_frames = 0;  // 0 = all
  int scale = 2;
  int chunks = 2;
  int test_stride = 10;

  // backbone
  std::string arch = "edsr_m";
  std::string profile = "full";   // full | tiny
  int channels = 0;               // 0 = profile default
  int resblocks = 0;              // 0 = profile default

  // train
  std::string mode = "joint";
  int kernel = 1;
  int iterations = 2000;  // per-chunk budget T
  int batch = 16;
  int patch_lr = 48;
  double lr = 1e-4;
  int eval_interval = 0;
  int checkpoint_interval = 0;

  // eval / analysis / codec
  bool y_channel = false;
  std::string probe;
  std::string codec = "h264";
  std::uint64_t budget = 0;  // 0 = size of the joint delivery
  std::string bundle;
  int chunk = -1;
  std::filesystem::path out;

  std::function<void(const std::string&)> log = [](const std::string& s) { std::cout << s << "\n"; };
};

inline BackboneConfig backbone_config(const RunConfig& rc) {
  BackboneConfig c;
  const Arch a = parse_arch(rc.arch);
  if (rc.profile == "tiny") {
    c = BackboneConfig::tiny(a, rc.scale);
  } else if (rc.profile == "full") {
    c = BackboneConfig::full(a, rc.scale);
  } else {
    fail(ErrorCode::kConfig, "unknown profile '" + rc.profile + "' (expected full or tiny)");
  }
  if (rc.channels > 0) c.channels = rc.channels;
  if (rc.resblocks > 0) c.n_resblocks = rc.resblocks;
  validate(c);
  return c;
}

inline TrainConfig train_config(const RunConfig& rc, TrainMode mode, int n) {
  TrainConfig t;
  t.mode = mode;
  t.iterations = budget_steps(mode, rc.iterations, n);
  t.batch = rc.batch;
  t.lr = rc.lr;
  t.seed = rc.seed;
  t.patch_lr = rc.patch_lr;
  t.kernel = rc.kernel;
  t.eval_interval = rc.eval_interval;
  t.checkpoint_interval = rc.checkpoint_interval;
  validate(t);
  return t;
}

inline PsnrSpace psnr_space(const RunConfig& rc) { return rc.y_channel ? PsnrSpace::kY : PsnrSpace::kRgb; }

namespace paths {
inline std::filesystem::path models(const RunConfig& rc) { return rc.workdir / "models"; }
inline std::filesystem::path model(const RunConfig& rc, const std::string& name) {
  return models(rc) / (name + ".bundle");
}
inline std::filesystem::path lr_dir(const RunConfig& rc, int scale) {
  return rc.workdir / ("lrx" + std::to_string(scale));
}
}  // namespace paths

inline std::vector<std::filesystem::path> lr_video_files(const RunConfig& rc, int scale) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(paths::lr_dir(rc, scale)))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

// ---------------------------------------------------------------------------

inline ChunkManifest cmd_prepare(const RunConfig& rc) {
  if (rc.input.empty()) fail(ErrorCode::kConfig, "prepare needs --input (a video, a PNG directory, or 'synthetic')");
  VideoAsset video;
  if (rc.input == "synthetic") {
    video = synthetic_two_chunk_video();
    if (rc.max_frames > 0 && rc.max_frames < video.frames.size()) video.frames.resize(rc.max_frames);
  } else {
    video = decode_frames(rc.input, rc.max_frames > 0 ? std::optional<std::size_t>(rc.max_frames) : std::nullopt);
  }
  std::filesystem::create_directories(rc.workdir);
  auto m = write_cache(rc.workdir, video, rc.scale, rc.chunks, rc.test_stride);
  rc.log("prepared " + std::to_string(video.frame_count()) + " frames in " + std::to_string(m.n) + " chunks at x" +
         std::to_string(m.scale));
  return m;
}

struct Workspace {
  ChunkManifest manifest;
  DatasetSplit data;
};

inline Workspace load_workspace(const RunConfig& rc) {
  if (!std::filesystem::exists(rc.workdir / "chunks.json"))
    fail(ErrorCode::kConfig, "'" + rc.workdir.string() + "' is not a prepared workdir (run prepare first)");
  Workspace ws;
  ws.manifest = read_chunk_manifest(rc.workdir);
  ws.data = load_cached_datasets(rc.workdir, ws.manifest);
  return ws;
}

namespace detail {

inline void save_model(const RunConfig& rc, const std::string& name, const BackboneParams<float>& shared,
                       std::vector<CaFMSet<float>> cafms, const std::string& mode, std::vector<ChunkSpec> ranges) {
  std::filesystem::create_directories(paths::models(rc));
  save_bundle(paths::model(rc, name), make_bundle(shared, std::move(cafms), mode, rc.kernel, std::move(ranges)));
}

/// One `iter,loss,psnr_mean` table per trained model.
class TrainLog {
 public:
  void add(const std::string& model, const HistoryPoint& h) {
    auto& t = tables_[model];
    if (t.empty()) t = "iter,loss,psnr_mean\n";
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.4f\n", h.iteration, h.loss, psnr_for_csv(h.psnr));
    t += buf;
  }
  const std::map<std::string, std::string>& tables() const { return tables_; }

 private:
  std::map<std::string, std::string> tables_;
};

}  // namespace detail

/// Trains `rc.mode` and writes models/<mode>.bundle (separate mode writes one
/// bundle per chunk). Returns the written paths.
inline std::vector<std::filesystem::path> cmd_train(const RunConfig& rc) {
  const TrainMode mode = parse_mode(rc.mode);
  const auto ws = load_workspace(rc);
  BackboneConfig bc = backbone_config(rc);
  if (bc.scale != ws.manifest.scale) {
    bc.scale = ws.manifest.scale;
    validate(bc);
  }
  const int n = ws.manifest.n;
  const auto cfg = train_config(rc, mode, n);
  const auto arch = make_architecture(bc);
  write_text_file(rc.workdir / "arch.json", arch_manifest_json(arch).dump(2) + "\n");
  std::filesystem::create_directories(rc.workdir / "logs");

  detail::TrainLog log;
  std::string tag = to_string(mode);
  std::string chunk_label = "all";
  TrainHooks hooks;
  auto model_name = [&] { return chunk_label == "all" ? tag : tag + "_c" + chunk_label; };
  hooks.on_history = [&](const HistoryPoint& h) {
    log.add(model_name(), h);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "[%s %s] iter %d loss %.5f psnr %.3f", to_string(mode), chunk_label.c_str(),
                  h.iteration, h.loss, h.psnr);
    rc.log(buf);
  };
  hooks.on_checkpoint = [&](int iter, const BackboneParams<float>& shared, const std::vector<CaFMSet<float>>& cafms,
                            const std::vector<std::uint8_t>& adam) {
    const auto dir = rc.workdir / "ckpt" / model_name();
    std::filesystem::create_directories(dir);
    const std::string base = "ckpt_" + std::to_string(iter);
    save_bundle(dir / (base + ".bundle"), make_bundle(shared, cafms, to_string(mode), rc.kernel, {}));
    write_bytes(dir / (base + ".adam"), adam);
  };

  std::vector<std::filesystem::path> written;
  const auto& train = ws.data.train;
  const auto& test = ws.data.test;
  switch (mode) {
    case TrainMode::kM0: {
      auto model = train_m0<float>(merge_datasets(train), cfg, bc, test, hooks);
      detail::save_model(rc, "m0", model.shared, {}, "m0", {});
      written.push_back(paths::model(rc, "m0"));
      break;
    }
    case TrainMode::kSeparate: {
      for (int i = 0; i < n; ++i) {
        chunk_label = std::to_string(i);
        auto model = train_m0<float>(train[i], cfg, bc, {test[i]}, hooks, static_cast<std::uint64_t>(i));
        const std::string name = "separate_" + std::to_string(i);
        detail::save_model(rc, name, model.shared, {}, "separate", {ws.manifest.ranges[i]});
        written.push_back(paths::model(rc, name));
      }
      break;
    }
    case TrainMode::kFt: {
      const auto m0_path = paths::model(rc, "m0");
      if (!std::filesystem::exists(m0_path)) fail(ErrorCode::kConfig, "ft needs a trained m0 (run train --mode m0)");
      const auto m0b = load_bundle(m0_path);
      if (!(m0b.backbone_config == bc)) fail(ErrorCode::kConfig, "m0 was trained with a different backbone");
      TrainedModel<float> m0{m0b.shared, {}, {}};
      TrainedModel<float> model{m0.shared, {}, {}};
      for (int i = 0; i < n; ++i) {
        chunk_label = std::to_string(i);
        TrainConfig one = cfg;
        one.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
        auto part = finetune_cafm<float>(m0, {train[i]}, one, {test[i]}, hooks);
        auto set = std::move(part.cafms.front());
        set.chunk_index = i;
        model.cafms.push_back(std::move(set));
      }
      detail::save_model(rc, "ft", model.shared, std::move(model.cafms), "ft", ws.manifest.ranges);
      written.push_back(paths::model(rc, "ft"));
      break;
    }
    case TrainMode::kJoint: {
      auto model = train_joint<float>(train, cfg, bc, test, hooks);
      detail::save_model(rc, "joint", model.shared, std::move(model.cafms), "joint", ws.manifest.ranges);
      written.push_back(paths::model(rc, "joint"));
      break;
    }
  }
  for (const auto& [name, table] : log.tables()) write_text_file(rc.workdir / "logs" / ("train_" + name + ".csv"), table);
  return written;
}

inline std::string storage_json(const StorageReport& s) {
  return nlohmann::json{{"lr_video_bytes", s.lr_video_bytes},
                        {"shared_bytes", s.shared_bytes},
                        {"per_chunk_cafm_bytes", s.per_chunk_cafm_bytes},
                        {"total_bytes", s.total_bytes}}
      .dump(2);
}

/// Re-validates models/<mode>.bundle, writes delivery/<mode>.bundle and
/// returns its storage report.
inline StorageReport cmd_pack(const RunConfig& rc) {
  const auto ws = load_workspace(rc);
  const std::filesystem::path src = rc.bundle.empty() ? paths::model(rc, rc.mode) : std::filesystem::path(rc.bundle);
  if (!std::filesystem::exists(src)) fail(ErrorCode::kConfig, "no model at '" + src.string() + "' (train first)");
  auto b = load_bundle(src);
  if (b.manifest.chunk_ranges.empty() && b.cafms.empty()) b.manifest.chunk_ranges = ws.manifest.ranges;
  const auto dir = rc.workdir / "delivery";
  std::filesystem::create_directories(dir);
  const auto out = rc.out.empty() ? dir / (src.stem().string() + ".bundle") : rc.out;
  save_bundle(out, b);
  const auto rep = storage_report(out, lr_video_files(rc, ws.manifest.scale));
  write_text_file(out.parent_path() / (out.stem().string() + ".storage.json"), storage_json(rep) + "\n");
  rc.log("packed " + out.string() + ": " + std::to_string(rep.total_bytes) + " bytes with LR video");
  return rep;
}

/// Human-readable summary of a bundle file.
inline std::string inspect_bundle(const std::filesystem::path& path) {
  BundleReader reader(path);
  const auto b = load_bundle(path);
  std::ostringstream out;
  const auto& m = b.manifest;
  out << "file: " << path.string() << " (" << reader.file_size() << " bytes)\n";
  out << "format_version: " << m.format_version << "\nmode: " << m.mode << "\narch: "
      << to_string(b.backbone_config.arch) << " x" << m.scale << " C=" << b.backbone_config.channels << "\n";
  out << "cafm sets: " << m.n << " (k=" << m.kernel << ")\n";
  out << "backbone params: " << count_params(b.shared) << "\n";
  for (int i = 0; i <= m.n; ++i) {
    const auto [s, e] = reader.section_span(static_cast<std::size_t>(i));
    out << "section " << i << (i == 0 ? " shared" : " chunk " + std::to_string(i - 1)) << ": [" << s << ", " << e
        << ") " << (e - s) << " bytes";
    if (i > 0) {
      const auto& set = b.cafms[static_cast<std::size_t>(i) - 1];
      out << ", " << set.param_count() << " params";
      if (i - 1 < static_cast<int>(m.chunk_ranges.size()))
        out << ", frames [" << m.chunk_ranges[i - 1].start << ", " << m.chunk_ranges[i - 1].end << ")";
    }
    out << "\n";
  }
  return out.str();
}

/// Writes SR frames of one chunk (or the whole video) to rc.out.
inline std::size_t cmd_reconstruct(const RunConfig& rc) {
  const auto ws = load_workspace(rc);
  const std::filesystem::path src =
      rc.bundle.empty() ? rc.workdir / "delivery" / (rc.mode + ".bundle") : std::filesystem::path(rc.bundle);
  if (!std::filesystem::exists(src)) fail(ErrorCode::kConfig, "no bundle at '" + src.string() + "'");
  const auto lr = decode_frames(paths::lr_dir(rc, ws.manifest.scale));
  const auto outdir = rc.out.empty() ? rc.workdir / "sr" / src.stem() : rc.out;
  std::filesystem::create_directories(outdir);
  std::vector<FrameTensor> sr;
  std::size_t first = 0;
  if (rc.chunk >= 0) {
    BundleReader reader(src);
    if (static_cast<std::size_t>(rc.chunk) >= ws.manifest.ranges.size())
      fail(ErrorCode::kRange, "chunk " + std::to_string(rc.chunk) + " out of range");
    const auto& c = ws.manifest.ranges[static_cast<std::size_t>(rc.chunk)];
    first = c.start;
    sr = reconstruct_chunk(reader, rc.chunk,
                           {lr.frames.begin() + static_cast<std::ptrdiff_t>(c.start),
                            lr.frames.begin() + static_cast<std::ptrdiff_t>(c.end)});
  } else {
    auto b = load_bundle(src);
    if (b.manifest.chunk_ranges.empty() && !b.cafms.empty()) b.manifest.chunk_ranges = ws.manifest.ranges;
    sr = reconstruct_video(b, lr.frames);
  }
  for (std::size_t i = 0; i < sr.size(); ++i) write_png(outdir / frame_filename(first + i), frame_to_image(sr[i]));
  rc.log("wrote " + std::to_string(sr.size()) + " frames to " + outdir.string());
  return sr.size();
}

/// Evaluates every trained model in the workdir plus the bicubic floor and
/// writes report.csv. Rows: one per (mode, chunk).
inline std::vector<EvalReport> cmd_report(const RunConfig& rc) {
  const auto ws = load_workspace(rc);
  const auto space = psnr_space(rc);
  const auto lr_files = lr_video_files(rc, ws.manifest.scale);
  std::uint64_t lr_bytes = 0;
  for (const auto& f : lr_files) lr_bytes += std::filesystem::file_size(f);
  const auto& test = ws.data.test;
  const int n = ws.manifest.n;

  std::vector<EvalReport> reports;
  reports.push_back(evaluate_bicubic(test, space));
  reports.back().storage = StorageReport{lr_bytes, 0, {}, lr_bytes};

  auto one = [&](const std::string& name, const std::string& label) {
    const auto path = paths::model(rc, name);
    if (!std::filesystem::exists(path)) return;
    auto r = evaluate(load_bundle(path), test, label, space);
    r.storage = storage_report(path, lr_files);
    reports.push_back(std::move(r));
  };
  one("m0", "m0");

  std::vector<BackboneParams<float>> separate;
  std::uint64_t sep_bytes = 0;
  for (int i = 0; i < n; ++i) {
    const auto path = paths::model(rc, "separate_" + std::to_string(i));
    if (!std::filesystem::exists(path)) break;
    separate.push_back(load_bundle(path).shared);
    sep_bytes += std::filesystem::file_size(path);
  }
  if (static_cast<int>(separate.size()) == n) {
    auto r = evaluate_separate(separate, test, space);
    r.storage = StorageReport{lr_bytes, sep_bytes, {}, lr_bytes + sep_bytes};
    reports.push_back(std::move(r));
  }
  one("ft", "ft");
  one("joint", "ours");

  write_text_file(rc.workdir / "report.csv", report_csv(reports));
  for (const auto& r : reports) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-8s video PSNR %.3f dB, storage %llu bytes", r.mode.c_str(), r.video_psnr,
                  static_cast<unsigned long long>(r.storage ? r.storage->total_bytes : 0));
    rc.log(buf);
  }
  return reports;
}

/// Cross-model distance matrices at every modulated layer. Defaults to the
/// per-chunk separate models; `rc.bundle` may list bundles comma-separated.
inline DiagonalSummary cmd_analyze(const RunConfig& rc) {
  const auto ws = load_workspace(rc);
  std::vector<std::filesystem::path> files;
  if (!rc.bundle.empty()) {
    std::stringstream ss(rc.bundle);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) files.emplace_back(item);
  } else {
    for (int i = 0; i < ws.manifest.n; ++i) {
      const auto p = paths::model(rc, "separate_" + std::to_string(i));
      if (std::filesystem::exists(p)) files.push_back(p);
    }
  }
  if (files.size() < 2) fail(ErrorCode::kConfig, "analyze needs at least two models (train --mode separate)");
  std::vector<ModelBundle> bundles;
  for (const auto& f : files) bundles.push_back(load_bundle(f));
  std::vector<AnalyzedModel<float>> models;
  for (const auto& b : bundles) models.push_back({&b.shared, nullptr});

  FrameTensor probe;
  if (!rc.probe.empty()) {
    probe = decode_frames(rc.probe, 1).frames.front();
  } else {
    probe = *ws.data.test.front().pairs.front().lr;
  }
  const auto matrices = all_distance_matrices(models, probe);
  write_analysis(rc.workdir / "analysis", matrices, bundles.front().shared.arch);
  const auto s = summarize(matrices);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "diagonal mean %.4f, off-diagonal mean %.4f", s.diagonal_mean, s.offdiagonal_mean);
  rc.log(buf);
  return s;
}

/// Rate-matches the HR video to the joint delivery size (or rc.budget).
inline EvalReport cmd_codec_compare(const RunConfig& rc) {
  const auto ws = load_workspace(rc);
  std::uint64_t budget = rc.budget;
  if (budget == 0) {
    const auto joint = rc.workdir / "delivery" / "joint.bundle";
    if (!std::filesystem::exists(joint)) fail(ErrorCode::kConfig, "no --budget and no delivery/joint.bundle (run pack)");
    budget = storage_report(joint, lr_video_files(rc, ws.manifest.scale)).total_bytes;
  }
  const auto dir = rc.workdir / "codec";
  std::filesystem::create_directories(dir);
  std::ostringstream args;
  FfmpegEncoder enc(parse_codec(rc.codec), [&](const std::string& cmd) { args << cmd << "\n"; });
  const auto video = decode_frames(rc.workdir / "hr");
  RateMatch match;
  std::optional<EvalReport> report;
  try {
    report = codec_baseline(enc, video, ws.manifest.ranges, budget, rc.codec, dir / (rc.codec + ".mp4"),
                            psnr_space(rc), &match);
  } catch (...) {
    write_text_file(dir / (rc.codec + ".log"), args.str());
    throw;
  }
  write_text_file(dir / (rc.codec + ".log"), args.str());
  write_text_file(dir / (rc.codec + ".csv"), report_csv({*report}, ""));
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s at %.1f kbps: %llu of %llu bytes, video PSNR %.3f dB", rc.codec.c_str(),
                match.kbps, static_cast<unsigned long long>(match.bytes), static_cast<unsigned long long>(budget),
                report->video_psnr);
  rc.log(buf);
  return *report;
}

/// Exit status for an error category.
inline int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::kConfig:
      return 2;
    case ErrorCode::kDivergence:
      return 4;
    case ErrorCode::kEnvironment:
      return 5;
    default:
      return 3;
  }
}

}  // namespace cafm
