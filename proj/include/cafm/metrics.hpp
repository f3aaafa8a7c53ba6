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
#include <limits>

#include "cafm/media.hpp"

namespace cafm {

enum class PsnrSpace { kRgb, kY };

inline double mse(const FrameTensor& ref, const FrameTensor& test, PsnrSpace space = PsnrSpace::kRgb) {
  if (ref.height != test.height || ref.width != test.width || ref.data.size() != test.data.size())
    fail(ErrorCode::kMetric, "PSNR operands differ in shape");
  if (ref.data.empty()) fail(ErrorCode::kMetric, "PSNR of an empty frame");
  double sum = 0.0;
  if (space == PsnrSpace::kRgb) {
    for (std::size_t i = 0; i < ref.data.size(); ++i) {
      const double d = static_cast<double>(ref.data[i]) - static_cast<double>(test.data[i]);
      sum += d * d;
    }
    return sum / static_cast<double>(ref.data.size());
  }
  // BT.601 luma, studio range, on [0,1] inputs.
  const auto luma = [](const float* p) {
    return (16.0 + 65.481 * p[0] + 128.553 * p[1] + 24.966 * p[2]) / 255.0;
  };
  const std::size_t pixels = ref.data.size() / 3;
  for (std::size_t i = 0; i < pixels; ++i) {
    const double d = luma(&ref.data[3 * i]) - luma(&test.data[3 * i]);
    sum += d * d;
  }
  return sum / static_cast<double>(pixels);
}

/// 10·log10(1 / MSE) with peak 1.0; +inf for identical frames.
inline double psnr(const FrameTensor& ref, const FrameTensor& test, PsnrSpace space = PsnrSpace::kRgb) {
  const double m = mse(ref, test, space);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

/// Value written to CSV tables in place of +inf.
inline constexpr double kPsnrCsvCap = 99.99;

inline double psnr_for_csv(double v) { return std::isinf(v) && v > 0 ? kPsnrCsvCap : v; }

}  // namespace cafm
