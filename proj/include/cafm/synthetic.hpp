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

// Procedural test clips. Pixel values are multiples of 1/255 so the clips
// survive a PNG round trip unchanged.

#pragma once

#include <cmath>
#include <numbers>

#include "cafm/image_io.hpp"
#include "cafm/media.hpp"

namespace cafm {

enum class SyntheticStyle {
  kStripes,  // warm drifting diagonal stripes over a gradient
  kDisks,    // cool moving disks over a checkerboard
};

inline FrameTensor synthetic_frame(SyntheticStyle style, int t, int height, int width) {
  constexpr double pi = std::numbers::pi;
  FrameTensor f(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double u = static_cast<double>(x) / width;
      const double v = static_cast<double>(y) / height;
      double r, g, b;
      if (style == SyntheticStyle::kStripes) {
        const double phase = 0.35 * t;
        const double s1 = std::sin(2.0 * pi * (5.0 * u + 3.0 * v) + phase);
        const double s2 = std::sin(2.0 * pi * (11.0 * u - 2.0 * v) - 0.5 * phase);
        r = 0.55 + 0.25 * s1 + 0.10 * u;
        g = 0.35 + 0.15 * s1 * s2 + 0.10 * v;
        b = 0.20 + 0.08 * s2;
      } else {
        const bool check = ((x / 6) + (y / 6)) % 2 == 0;
        r = 0.15 + (check ? 0.10 : 0.0);
        g = 0.30 + 0.20 * v;
        b = 0.45 + (check ? 0.15 : 0.0);
        const double cx[3] = {0.25 + 0.02 * t, 0.70 - 0.015 * t, 0.5};
        const double cy[3] = {0.30, 0.65, 0.2 + 0.03 * t};
        const double rad[3] = {0.14, 0.11, 0.08};
        for (int k = 0; k < 3; ++k) {
          const double d = std::hypot(u - cx[k], v - cy[k]);
          if (d < rad[k]) {
            r = 0.1 + 0.3 * k;
            g = 0.85 - 0.25 * k;
            b = 0.9 - 0.1 * k;
          }
        }
      }
      f.at(y, x, 0) = quantize_unit(r) / 255.0f;
      f.at(y, x, 1) = quantize_unit(g) / 255.0f;
      f.at(y, x, 2) = quantize_unit(b) / 255.0f;
    }
  return f;
}

inline VideoAsset synthetic_clip(SyntheticStyle style, int frames = 16, int height = 96, int width = 96) {
  VideoAsset v;
  v.source_id = style == SyntheticStyle::kStripes ? "synthetic:stripes" : "synthetic:disks";
  for (int t = 0; t < frames; ++t) v.frames.push_back(synthetic_frame(style, t, height, width));
  return v;
}

/// Two visually distinct clips back to back: a natural 2-chunk video.
inline VideoAsset synthetic_two_chunk_video(int frames_per_clip = 16, int size = 96) {
  auto a = synthetic_clip(SyntheticStyle::kStripes, frames_per_clip, size, size);
  auto b = synthetic_clip(SyntheticStyle::kDisks, frames_per_clip, size, size);
  a.frames.insert(a.frames.end(), b.frames.begin(), b.frames.end());
  a.source_id = "synthetic:two-chunk";
  return a;
}

}  // namespace cafm
