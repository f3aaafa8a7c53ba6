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

// Forward and backward kernels on single (C, H, W) feature maps.

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <vector>

#include "cafm/tensor.hpp"

namespace cafm::ops {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

/// Unfolds k×k neighbourhoods (zero padded by k/2) into a
/// (C·k·k) × (H·W) matrix.
template <typename T>
void im2col(const Tensor<T>& x, int k, std::vector<T>& cols) {
  const int channels = static_cast<int>(x.dim(0)), h = static_cast<int>(x.dim(1)), w = static_cast<int>(x.dim(2));
  const int pad = k / 2;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  cols.assign(static_cast<std::size_t>(channels) * k * k * hw, T(0));
  for (int c = 0; c < channels; ++c)
    for (int u = 0; u < k; ++u)
      for (int v = 0; v < k; ++v) {
        T* row = cols.data() + ((static_cast<std::size_t>(c) * k + u) * k + v) * hw;
        const int dx = v - pad;
        const int x_lo = std::max(0, -dx), x_hi = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          const int sy = y + u - pad;
          if (sy < 0 || sy >= h) continue;
          const T* src = x.data() + (static_cast<std::size_t>(c) * h + sy) * w;
          T* dst = row + static_cast<std::size_t>(y) * w;
          for (int xx = x_lo; xx < x_hi; ++xx) dst[xx] = src[xx + dx];
        }
      }
}

/// Adjoint of im2col: accumulates columns back into dx.
template <typename T>
void col2im_add(const std::vector<T>& cols, int k, Tensor<T>& dx) {
  const int channels = static_cast<int>(dx.dim(0)), h = static_cast<int>(dx.dim(1)), w = static_cast<int>(dx.dim(2));
  const int pad = k / 2;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < channels; ++c)
    for (int u = 0; u < k; ++u)
      for (int v = 0; v < k; ++v) {
        const T* row = cols.data() + ((static_cast<std::size_t>(c) * k + u) * k + v) * hw;
        const int dxo = v - pad;
        const int x_lo = std::max(0, -dxo), x_hi = std::min(w, w - dxo);
        for (int y = 0; y < h; ++y) {
          const int sy = y + u - pad;
          if (sy < 0 || sy >= h) continue;
          T* dst = dx.data() + (static_cast<std::size_t>(c) * h + sy) * w;
          const T* src = row + static_cast<std::size_t>(y) * w;
          for (int xx = x_lo; xx < x_hi; ++xx) dst[xx + dxo] += src[xx];
        }
      }
}

/// Stride-1 "same" convolution. weight is (Cout, Cin, k, k).
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  const std::size_t cout = weight.dim(0), cin = weight.dim(1), k = weight.dim(2);
  if (x.ndim() != 3 || x.dim(0) != cin)
    fail(ErrorCode::kInference, "conv input " + shape_string(x.shape()) + " does not match weight " +
                                    shape_string(weight.shape()));
  const std::size_t h = x.dim(1), w = x.dim(2), hw = h * w;
  Tensor<T> y({cout, h, w});
  MatrixMap<T> out(y.data(), cout, hw);
  ConstMatrixMap<T> wm(weight.data(), cout, cin * k * k);
  if (k == 1) {
    out.noalias() = wm * ConstMatrixMap<T>(x.data(), cin, hw);
  } else {
    std::vector<T> cols;
    im2col(x, static_cast<int>(k), cols);
    out.noalias() = wm * ConstMatrixMap<T>(cols.data(), cin * k * k, hw);
  }
  for (std::size_t o = 0; o < cout; ++o) out.row(o).array() += bias[o];
  return y;
}

/// Accumulates parameter gradients (skipped when the pointers are null) and
/// returns dL/dx (empty when need_dx is false).
template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& dy, Tensor<T>* dweight,
                          Tensor<T>* dbias, bool need_dx = true) {
  const std::size_t cout = weight.dim(0), cin = weight.dim(1), k = weight.dim(2);
  const std::size_t hw = x.dim(1) * x.dim(2);
  ConstMatrixMap<T> dym(dy.data(), cout, hw);
  ConstMatrixMap<T> wm(weight.data(), cout, cin * k * k);
  if (dbias != nullptr)
    for (std::size_t o = 0; o < cout; ++o) (*dbias)[o] += dym.row(o).sum();
  Tensor<T> dx;
  if (k == 1) {
    ConstMatrixMap<T> xm(x.data(), cin, hw);
    if (dweight != nullptr) MatrixMap<T>(dweight->data(), cout, cin).noalias() += dym * xm.transpose();
    if (need_dx) {
      dx = Tensor<T>(x.shape());
      MatrixMap<T>(dx.data(), cin, hw).noalias() = wm.transpose() * dym;
    }
  } else {
    if (dweight == nullptr && !need_dx) return dx;
    std::vector<T> cols;
    if (dweight != nullptr) {
      im2col(x, static_cast<int>(k), cols);
      MatrixMap<T>(dweight->data(), cout, cin * k * k).noalias() +=
          dym * ConstMatrixMap<T>(cols.data(), cin * k * k, hw).transpose();
    }
    if (need_dx) {
      cols.resize(cin * k * k * hw);
      MatrixMap<T>(cols.data(), cin * k * k, hw).noalias() = wm.transpose() * dym;
      dx = Tensor<T>(x.shape());
      col2im_add(cols, static_cast<int>(k), dx);
    }
  }
  return dx;
}

/// Per-channel depth-wise k×k filter plus per-channel bias, zero padded.
/// scale is (C, k, k), bias is (C).
template <typename T>
Tensor<T> depthwise_affine(const Tensor<T>& x, const Tensor<T>& scale, const Tensor<T>& bias) {
  if (x.ndim() != 3 || scale.ndim() != 3 || x.dim(0) != scale.dim(0) || bias.size() != x.dim(0))
    fail(ErrorCode::kShape, "modulation of " + shape_string(x.shape()) + " with scale " +
                                shape_string(scale.shape()) + " / bias " + shape_string(bias.shape()));
  const int channels = static_cast<int>(x.dim(0)), h = static_cast<int>(x.dim(1)), w = static_cast<int>(x.dim(2));
  const int k = static_cast<int>(scale.dim(1)), pad = k / 2;
  Tensor<T> y(x.shape());
  for (int c = 0; c < channels; ++c) {
    const T* xc = x.data() + static_cast<std::size_t>(c) * h * w;
    T* yc = y.data() + static_cast<std::size_t>(c) * h * w;
    const T* kc = scale.data() + static_cast<std::size_t>(c) * k * k;
    for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) yc[i] = bias[c];
    for (int u = 0; u < k; ++u)
      for (int v = 0; v < k; ++v) {
        const T a = kc[u * k + v];
        const int dx = v - pad;
        const int x_lo = std::max(0, -dx), x_hi = std::min(w, w - dx);
        for (int yy = 0; yy < h; ++yy) {
          const int sy = yy + u - pad;
          if (sy < 0 || sy >= h) continue;
          const T* src = xc + static_cast<std::size_t>(sy) * w;
          T* dst = yc + static_cast<std::size_t>(yy) * w;
          for (int xx = x_lo; xx < x_hi; ++xx) dst[xx] += a * src[xx + dx];
        }
      }
  }
  return y;
}

template <typename T>
Tensor<T> depthwise_affine_backward(const Tensor<T>& x, const Tensor<T>& scale, const Tensor<T>& dy,
                                    Tensor<T>* dscale, Tensor<T>* dbias) {
  const int channels = static_cast<int>(x.dim(0)), h = static_cast<int>(x.dim(1)), w = static_cast<int>(x.dim(2));
  const int k = static_cast<int>(scale.dim(1)), pad = k / 2;
  Tensor<T> dx(x.shape());
  for (int c = 0; c < channels; ++c) {
    const T* xc = x.data() + static_cast<std::size_t>(c) * h * w;
    const T* gc = dy.data() + static_cast<std::size_t>(c) * h * w;
    T* dxc = dx.data() + static_cast<std::size_t>(c) * h * w;
    const T* kc = scale.data() + static_cast<std::size_t>(c) * k * k;
    if (dbias != nullptr) {
      T acc = T(0);
      for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) acc += gc[i];
      (*dbias)[c] += acc;
    }
    for (int u = 0; u < k; ++u)
      for (int v = 0; v < k; ++v) {
        const T a = kc[u * k + v];
        const int dxo = v - pad;
        const int x_lo = std::max(0, -dxo), x_hi = std::min(w, w - dxo);
        T da = T(0);
        for (int yy = 0; yy < h; ++yy) {
          const int sy = yy + u - pad;
          if (sy < 0 || sy >= h) continue;
          const T* src = xc + static_cast<std::size_t>(sy) * w;
          T* dsrc = dxc + static_cast<std::size_t>(sy) * w;
          const T* g = gc + static_cast<std::size_t>(yy) * w;
          for (int xx = x_lo; xx < x_hi; ++xx) {
            da += g[xx] * src[xx + dxo];
            dsrc[xx + dxo] += a * g[xx];
          }
        }
        if (dscale != nullptr) (*dscale)[static_cast<std::size_t>(c) * k * k + u * k + v] += da;
      }
  }
  return dx;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  Tensor<T> dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T(0) ? dy[i] : T(0);
  return dx;
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  return y;
}

/// Uses the forward output y = tanh(x).
template <typename T>
Tensor<T> tanh_backward(const Tensor<T>& y, const Tensor<T>& dy) {
  Tensor<T> dx(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * (T(1) - y[i] * y[i]);
  return dx;
}

/// (C·r², H, W) → (C, H·r, W·r); channel c·r² + i·r + j feeds offset (i, j).
template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, int r) {
  const std::size_t rr = static_cast<std::size_t>(r) * r;
  if (x.dim(0) % rr != 0) fail(ErrorCode::kInference, "pixel shuffle channel count not divisible by r^2");
  const std::size_t c_out = x.dim(0) / rr, h = x.dim(1), w = x.dim(2);
  Tensor<T> y({c_out, h * r, w * r});
  for (std::size_t c = 0; c < c_out; ++c)
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        for (std::size_t yy = 0; yy < h; ++yy)
          for (std::size_t xx = 0; xx < w; ++xx)
            y.at(c, yy * r + i, xx * r + j) = x.at(c * rr + i * r + j, yy, xx);
  return y;
}

template <typename T>
Tensor<T> pixel_shuffle_backward(const Tensor<T>& dy, int r) {
  const std::size_t rr = static_cast<std::size_t>(r) * r;
  const std::size_t c_out = dy.dim(0), h = dy.dim(1) / r, w = dy.dim(2) / r;
  Tensor<T> dx({c_out * rr, h, w});
  for (std::size_t c = 0; c < c_out; ++c)
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        for (std::size_t yy = 0; yy < h; ++yy)
          for (std::size_t xx = 0; xx < w; ++xx)
            dx.at(c * rr + i * r + j, yy, xx) = dy.at(c, yy * r + i, xx * r + j);
  return dx;
}

}  // namespace cafm::ops
