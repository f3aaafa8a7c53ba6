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

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace cafm {

/// Failure categories. Each maps onto one exception type below; the CLI
/// turns them into process exit codes.
enum class ErrorCode {
  kDecode,
  kEmptyInput,
  kInvalidScale,
  kInvalidChunking,
  kInvalidPatch,
  kConfig,
  kInference,
  kShape,
  kLoss,
  kDivergence,
  kAnalysis,
  kBundleFormat,
  kBundleTruncated,
  kBundleShape,
  kPack,
  kIo,
  kRange,
  kMetric,
  kEval,
  kEnvironment,
  kRate,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDecode: return "decode";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kInvalidScale: return "invalid-scale";
    case ErrorCode::kInvalidChunking: return "invalid-chunking";
    case ErrorCode::kInvalidPatch: return "invalid-patch";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kInference: return "inference";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kLoss: return "loss";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kAnalysis: return "analysis";
    case ErrorCode::kBundleFormat: return "bundle-format";
    case ErrorCode::kBundleTruncated: return "bundle-truncated";
    case ErrorCode::kBundleShape: return "bundle-shape";
    case ErrorCode::kPack: return "pack";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kRange: return "range";
    case ErrorCode::kMetric: return "metric";
    case ErrorCode::kEval: return "eval";
    case ErrorCode::kEnvironment: return "environment";
    case ErrorCode::kRate: return "rate";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + " error: " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Budget below what the encoder can reach; carries the smallest size seen.
class RateError : public Error {
 public:
  RateError(const std::string& what, std::uint64_t floor_bytes)
      : Error(ErrorCode::kRate, what), floor_bytes_(floor_bytes) {}
  std::uint64_t floor_bytes() const noexcept { return floor_bytes_; }

 private:
  std::uint64_t floor_bytes_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

/// Reproducible random stream with hand-written distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % bound;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

/// Seed for the i-th independent sub-stream. derive_seed(s, 0) == s, so a
/// single-chunk run reproduces the undivided run exactly.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return seed + index * 0x9E3779B97F4A7C15ULL;
}

}  // namespace cafm
