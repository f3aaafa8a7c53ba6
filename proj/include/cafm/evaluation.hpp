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

#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cafm/bundle.hpp"
#include "cafm/media.hpp"
#include "cafm/metrics.hpp"
#include "cafm/network.hpp"

namespace cafm {

struct EvalReport {
  std::string mode;  // m0 | s1-n | ft | ours | bicubic | h264 | h265
  int scale = 2;
  std::vector<double> chunk_psnr;               // mean over each chunk's frames
  std::vector<std::vector<double>> frame_psnr;  // per chunk, per evaluated frame
  double video_psnr = 0.0;                      // mean over all evaluated frames
  std::optional<StorageReport> storage;
};

namespace detail {

inline void finish_report(EvalReport& r) {
  double sum = 0.0;
  std::size_t n = 0;
  r.chunk_psnr.clear();
  for (const auto& chunk : r.frame_psnr) {
    double cs = 0.0;
    for (double v : chunk) cs += v;
    r.chunk_psnr.push_back(chunk.empty() ? std::nan("") : cs / static_cast<double>(chunk.size()));
    sum += cs;
    n += chunk.size();
  }
  r.video_psnr = n ? sum / static_cast<double>(n) : std::nan("");
}

inline void check_eval_scale(int scale, const std::vector<ChunkDataset>& sets) {
  for (const auto& d : sets)
    if (d.scale != scale)
      fail(ErrorCode::kEval, "dataset scale x" + std::to_string(d.scale) + " does not match model scale x" +
                                 std::to_string(scale));
}

}  // namespace detail

/// Evaluates a bundle: chunk i uses modulation set i (the plain backbone when
/// the bundle carries none).
inline EvalReport evaluate(const ModelBundle& bundle, const std::vector<ChunkDataset>& test_sets,
                           const std::string& mode, PsnrSpace space = PsnrSpace::kRgb) {
  detail::check_eval_scale(bundle.manifest.scale, test_sets);
  if (!bundle.cafms.empty() && bundle.cafms.size() != test_sets.size())
    fail(ErrorCode::kEval, "bundle has " + std::to_string(bundle.cafms.size()) + " CaFM sets for " +
                               std::to_string(test_sets.size()) + " chunks");
  EvalReport r;
  r.mode = mode;
  r.scale = bundle.manifest.scale;
  for (std::size_t i = 0; i < test_sets.size(); ++i) {
    const CaFMSet<float>* cafm = bundle.cafms.empty() ? nullptr : &bundle.cafms[i];
    std::vector<double> frames;
    for (const auto& p : test_sets[i].pairs) frames.push_back(psnr(*p.hr, super_resolve(bundle.shared, cafm, *p.lr), space));
    r.frame_psnr.push_back(std::move(frames));
  }
  detail::finish_report(r);
  return r;
}

/// Evaluates one plain model per chunk (the separate-models regime).
inline EvalReport evaluate_separate(const std::vector<BackboneParams<float>>& models,
                                    const std::vector<ChunkDataset>& test_sets, PsnrSpace space = PsnrSpace::kRgb) {
  if (models.size() != test_sets.size()) fail(ErrorCode::kEval, "one model per chunk required");
  if (models.empty()) fail(ErrorCode::kEval, "no models to evaluate");
  detail::check_eval_scale(models.front().config().scale, test_sets);
  EvalReport r;
  r.mode = "s1-n";
  r.scale = models.front().config().scale;
  for (std::size_t i = 0; i < test_sets.size(); ++i) {
    std::vector<double> frames;
    for (const auto& p : test_sets[i].pairs) frames.push_back(psnr(*p.hr, super_resolve<float>(models[i], nullptr, *p.lr), space));
    r.frame_psnr.push_back(std::move(frames));
  }
  detail::finish_report(r);
  return r;
}

/// Bicubic upscaling of the LR frames: the floor every model must beat.
inline EvalReport evaluate_bicubic(const std::vector<ChunkDataset>& test_sets, PsnrSpace space = PsnrSpace::kRgb) {
  if (test_sets.empty()) fail(ErrorCode::kEval, "no test sets");
  EvalReport r;
  r.mode = "bicubic";
  r.scale = test_sets.front().scale;
  detail::check_eval_scale(r.scale, test_sets);
  for (const auto& d : test_sets) {
    std::vector<double> frames;
    for (const auto& p : d.pairs) frames.push_back(psnr(*p.hr, bicubic_upscale(*p.lr, d.scale), space));
    r.frame_psnr.push_back(std::move(frames));
  }
  detail::finish_report(r);
  return r;
}

/// report - baseline, per chunk and for the video mean.
struct Margin {
  std::vector<double> chunk;
  double video = 0.0;
};

inline Margin margin(const EvalReport& report, const EvalReport& baseline) {
  if (report.chunk_psnr.size() != baseline.chunk_psnr.size()) fail(ErrorCode::kEval, "reports cover different chunks");
  Margin m;
  for (std::size_t i = 0; i < report.chunk_psnr.size(); ++i) m.chunk.push_back(report.chunk_psnr[i] - baseline.chunk_psnr[i]);
  m.video = report.video_psnr - baseline.video_psnr;
  return m;
}

namespace detail {

inline std::string fmt_double(double v, int precision = 4) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, psnr_for_csv(v));
  return buf;
}

}  // namespace detail

/// One row per (mode, chunk). `margin_vs` names the report margins are
/// taken against (empty for none).
inline std::string report_csv(const std::vector<EvalReport>& reports, const std::string& margin_vs = "s1-n") {
  const EvalReport* base = nullptr;
  for (const auto& r : reports)
    if (r.mode == margin_vs) base = &r;
  std::ostringstream out;
  out << "mode,scale,chunk,frames,psnr,video_psnr,margin,storage_bytes\n";
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.chunk_psnr.size(); ++i) {
      out << r.mode << "," << r.scale << "," << i << "," << r.frame_psnr[i].size() << ","
          << detail::fmt_double(r.chunk_psnr[i]) << "," << detail::fmt_double(r.video_psnr) << ",";
      if (base != nullptr && base->chunk_psnr.size() == r.chunk_psnr.size())
        out << detail::fmt_double(r.chunk_psnr[i] - base->chunk_psnr[i]);
      out << ",";
      if (r.storage) out << r.storage->total_bytes;
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace cafm
