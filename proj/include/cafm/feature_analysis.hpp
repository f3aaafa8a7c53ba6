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

// Cross-model channel similarity: cosine-distance matrices between the
// feature maps of two models at one layer.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cafm/image_io.hpp"
#include "cafm/media.hpp"
#include "cafm/network.hpp"

namespace cafm {

/// Counts zero-vector encounters (each scored as distance 1.0).
struct ZeroVectorLog {
  std::size_t count = 0;
  bool warn = true;
};

inline ZeroVectorLog& zero_vector_log() {
  static thread_local ZeroVectorLog log;
  return log;
}

/// 1 - u·v / (|u||v|), clamped to [0, 2]. A zero vector on either side gives 1.
template <typename T>
double cosine_distance(const T* u, const T* v, std::size_t n) {
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = static_cast<double>(u[i]);
    const double b = static_cast<double>(v[i]);
    dot += a * b;
    uu += a * a;
    vv += b * b;
  }
  if (uu == 0.0 || vv == 0.0) {
    auto& log = zero_vector_log();
    if (log.warn && log.count == 0) std::cerr << "warning: cosine distance against a zero feature, scored as 1.0\n";
    ++log.count;
    return 1.0;
  }
  const double d = 1.0 - dot / (std::sqrt(uu) * std::sqrt(vv));
  return std::clamp(d, 0.0, 2.0);
}

template <typename T>
double cosine_distance(const std::vector<T>& u, const std::vector<T>& v) {
  if (u.size() != v.size()) fail(ErrorCode::kShape, "cosine distance operands differ in length");
  return cosine_distance(u.data(), v.data(), u.size());
}

struct DistanceMatrix {
  std::size_t channels = 0;
  std::vector<double> values;  // row-major channels x channels
  std::pair<int, int> model_pair{0, 1};
  int layer = 0;

  double at(std::size_t r, std::size_t c) const { return values[r * channels + c]; }

  double diagonal_mean() const {
    double s = 0.0;
    for (std::size_t i = 0; i < channels; ++i) s += at(i, i);
    return channels ? s / static_cast<double>(channels) : 0.0;
  }

  double offdiagonal_mean() const {
    if (channels < 2) return 0.0;
    double s = 0.0;
    for (std::size_t r = 0; r < channels; ++r)
      for (std::size_t c = 0; c < channels; ++c)
        if (r != c) s += at(r, c);
    return s / static_cast<double>(channels * (channels - 1));
  }

  DistanceMatrix transposed() const {
    DistanceMatrix t = *this;
    std::swap(t.model_pair.first, t.model_pair.second);
    for (std::size_t r = 0; r < channels; ++r)
      for (std::size_t c = 0; c < channels; ++c) t.values[c * channels + r] = at(r, c);
    return t;
  }
};

/// Entry (j1, j2) compares channel j1 of `a` with channel j2 of `b`.
template <typename T>
DistanceMatrix distance_matrix(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape() || a.ndim() != 3) fail(ErrorCode::kShape, "feature maps differ in shape");
  const std::size_t c = a.dim(0);
  const std::size_t hw = a.dim(1) * a.dim(2);
  DistanceMatrix m;
  m.channels = c;
  m.values.resize(c * c);
  for (std::size_t r = 0; r < c; ++r)
    for (std::size_t q = 0; q < c; ++q)
      m.values[r * c + q] = cosine_distance(a.data() + r * hw, b.data() + q * hw, hw);
  return m;
}

/// A model under analysis: a backbone and an optional modulation set.
template <typename T>
struct AnalyzedModel {
  const BackboneParams<T>* shared = nullptr;
  const CaFMSet<T>* cafm = nullptr;
};

template <typename T>
void check_same_arch(const std::vector<AnalyzedModel<T>>& models) {
  if (models.size() < 2) fail(ErrorCode::kAnalysis, "analysis needs at least two models");
  for (const auto& m : models)
    if (m.shared == nullptr || !(m.shared->config() == models.front().shared->config()))
      fail(ErrorCode::kAnalysis, "models do not share one architecture");
}

/// Matrices for every model pair (i1 < i2) at conv layer `layer`.
template <typename T>
std::vector<DistanceMatrix> distance_matrices(const std::vector<AnalyzedModel<T>>& models, const FrameTensor& probe,
                                              int layer) {
  check_same_arch(models);
  const auto input = frame_to_chw<T>(probe);
  std::vector<Tensor<T>> features;
  for (std::size_t i = 0; i < models.size(); ++i)
    features.push_back(
        std::move(extract_features(*models[i].shared, models[i].cafm, input, {layer}, static_cast<int>(i)).front().data));
  std::vector<DistanceMatrix> out;
  for (std::size_t i = 0; i < models.size(); ++i)
    for (std::size_t j = i + 1; j < models.size(); ++j) {
      auto m = distance_matrix(features[i], features[j]);
      m.model_pair = {static_cast<int>(i), static_cast<int>(j)};
      m.layer = layer;
      out.push_back(std::move(m));
    }
  return out;
}

/// Matrices for every pair and every modulated layer, layer-major.
template <typename T>
std::vector<DistanceMatrix> all_distance_matrices(const std::vector<AnalyzedModel<T>>& models,
                                                  const FrameTensor& probe) {
  check_same_arch(models);
  const auto& arch = models.front().shared->arch;
  const auto layers = arch.modulated_layers();
  const auto input = frame_to_chw<T>(probe);
  std::vector<std::vector<FeatureMap<T>>> features;
  for (std::size_t i = 0; i < models.size(); ++i)
    features.push_back(extract_features(*models[i].shared, models[i].cafm, input, layers, static_cast<int>(i)));
  std::vector<DistanceMatrix> out;
  for (std::size_t l = 0; l < layers.size(); ++l)
    for (std::size_t i = 0; i < models.size(); ++i)
      for (std::size_t j = i + 1; j < models.size(); ++j) {
        auto m = distance_matrix(features[i][l].data, features[j][l].data);
        m.model_pair = {static_cast<int>(i), static_cast<int>(j)};
        m.layer = layers[l];
        out.push_back(std::move(m));
      }
  return out;
}

struct DiagonalSummary {
  double diagonal_mean = 0.0;
  double offdiagonal_mean = 0.0;
};

inline DiagonalSummary summarize(const std::vector<DistanceMatrix>& matrices) {
  DiagonalSummary s;
  if (matrices.empty()) return s;
  for (const auto& m : matrices) {
    s.diagonal_mean += m.diagonal_mean();
    s.offdiagonal_mean += m.offdiagonal_mean();
  }
  s.diagonal_mean /= static_cast<double>(matrices.size());
  s.offdiagonal_mean /= static_cast<double>(matrices.size());
  return s;
}

/// Mean diagonal distance over every modulated layer and model pair.
template <typename T>
double average_diagonal(const std::vector<AnalyzedModel<T>>& models, const FrameTensor& probe) {
  return summarize(all_distance_matrices(models, probe)).diagonal_mean;
}

inline std::string distances_csv(const std::vector<DistanceMatrix>& matrices, const Architecture& arch) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  out << "pair,layer,diag_mean,offdiag_mean\n";
  for (const auto& m : matrices)
    out << m.model_pair.first << "-" << m.model_pair.second << "," << arch.layers.at(m.layer).name << ","
        << m.diagonal_mean() << "," << m.offdiagonal_mean() << "\n";
  return out.str();
}

/// Grayscale heatmap, one pixel block per entry; 0 is black, >=1 is white.
inline Image8 heatmap_image(const DistanceMatrix& m, int cell = 8) {
  Image8 img;
  img.width = static_cast<int>(m.channels) * cell;
  img.height = img.width;
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double v = std::clamp(m.at(static_cast<std::size_t>(y / cell), static_cast<std::size_t>(x / cell)), 0.0, 1.0);
      const auto g = static_cast<std::uint8_t>(std::lround(v * 255.0));
      auto* p = &img.pixels[(static_cast<std::size_t>(y) * img.width + x) * 3];
      p[0] = p[1] = p[2] = g;
    }
  return img;
}

/// Writes distances.csv plus heatmap_<pair>_<layer>.png into `dir`.
inline void write_analysis(const std::filesystem::path& dir, const std::vector<DistanceMatrix>& matrices,
                           const Architecture& arch) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "distances.csv", distances_csv(matrices, arch));
  for (const auto& m : matrices)
    write_png(dir / ("heatmap_" + std::to_string(m.model_pair.first) + "-" + std::to_string(m.model_pair.second) + "_" +
                     arch.layers.at(m.layer).name + ".png"),
              heatmap_image(m));
}

}  // namespace cafm
