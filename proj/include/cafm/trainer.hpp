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

// Training regimes:
//   m0        one backbone on the whole video
//   separate  one backbone per chunk
//   ft        frozen m0 backbone, one modulation set fine-tuned per chunk
//   joint     shared backbone trained on every chunk, modulation set i
//             trained on chunk i only

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "cafm/media.hpp"
#include "cafm/metrics.hpp"
#include "cafm/modulation.hpp"
#include "cafm/network.hpp"

namespace cafm {

enum class TrainMode { kM0, kSeparate, kFt, kJoint };

inline const char* to_string(TrainMode m) {
  switch (m) {
    case TrainMode::kM0: return "m0";
    case TrainMode::kSeparate: return "separate";
    case TrainMode::kFt: return "ft";
    case TrainMode::kJoint: return "joint";
  }
  return "?";
}

inline TrainMode parse_mode(const std::string& s) {
  if (s == "m0") return TrainMode::kM0;
  if (s == "separate" || s == "s1n") return TrainMode::kSeparate;
  if (s == "ft") return TrainMode::kFt;
  if (s == "joint" || s == "ours") return TrainMode::kJoint;
  fail(ErrorCode::kConfig, "unknown training mode '" + s + "'");
}

struct TrainConfig {
  TrainMode mode = TrainMode::kJoint;
  int iterations = 2000;
  int batch = 16;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// (iteration, factor) pairs; empty means halve at 50% and 75%.
  std::vector<std::pair<int, double>> lr_decay;
  std::uint64_t seed = 0;
  int patch_lr = 48;
  int kernel = 1;
  /// History/PSNR interval in iterations; 0 logs only the final iteration.
  int eval_interval = 0;
  /// Checkpoint interval in iterations; 0 disables checkpoints.
  int checkpoint_interval = 0;
};

inline void validate(const TrainConfig& c) {
  if (!(c.lr > 0.0)) fail(ErrorCode::kConfig, "learning rate must be > 0");
  if (c.iterations < 0) fail(ErrorCode::kConfig, "iterations must be >= 0");
  if (c.batch < 1) fail(ErrorCode::kConfig, "batch must be >= 1");
  if (c.patch_lr < 1) fail(ErrorCode::kConfig, "patch size must be >= 1");
  check_kernel(c.kernel);
}

/// Learning rate in effect at 0-based iteration `it`.
inline double learning_rate_at(const TrainConfig& c, int it) {
  double lr = c.lr;
  if (c.lr_decay.empty()) {
    if (it >= c.iterations / 2) lr *= 0.5;
    if (it >= (3 * c.iterations) / 4) lr *= 0.5;
  } else {
    for (const auto& [at, factor] : c.lr_decay)
      if (it >= at) lr *= factor;
  }
  return lr;
}

/// Optimization steps of a run given the per-chunk budget: separate and ft
/// spend `per_chunk` steps on each chunk, m0 and joint spend n·per_chunk, so
/// every regime costs as much as training the n separate models.
inline int budget_steps(TrainMode mode, int per_chunk, int n) {
  return (mode == TrainMode::kM0 || mode == TrainMode::kJoint) ? per_chunk * n : per_chunk;
}

struct HistoryPoint {
  int iteration = 0;
  double loss = 0.0;
  double psnr = 0.0;
};

template <typename T>
struct TrainedModel {
  BackboneParams<T> shared;
  std::vector<CaFMSet<T>> cafms;  // empty for m0 / separate
  std::vector<HistoryPoint> history;
};

// ---------------------------------------------------------------------------
// Losses

/// Mean over samples of the per-pixel mean absolute error.
template <typename T>
double chunk_loss(const std::vector<Tensor<T>>& sr, const std::vector<Tensor<T>>& hr) {
  if (sr.size() != hr.size() || sr.empty()) fail(ErrorCode::kLoss, "loss batches must be non-empty and aligned");
  double total = 0.0;
  for (std::size_t i = 0; i < sr.size(); ++i) {
    if (sr[i].shape() != hr[i].shape()) fail(ErrorCode::kLoss, "loss operands differ in shape");
    double s = 0.0;
    for (std::size_t j = 0; j < sr[i].size(); ++j) s += std::abs(static_cast<double>(hr[i][j]) - static_cast<double>(sr[i][j]));
    total += s / static_cast<double>(sr[i].size());
  }
  return total / static_cast<double>(sr.size());
}

inline double total_loss(const std::vector<double>& chunk_losses) {
  if (chunk_losses.empty()) fail(ErrorCode::kLoss, "total loss over zero chunks");
  double s = 0.0;
  for (double v : chunk_losses) s += v;
  return s;
}

// ---------------------------------------------------------------------------
// Adam

/// Adam with one step counter per parameter group. A group whose gradient
/// was not produced in a step is skipped entirely (no moment decay, no
/// update), so chunk-private parameters only move on their own samples.
template <typename T>
class Adam {
 public:
  Adam(double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// Registers a group of tensors; returns its id.
  int add_group(const std::vector<Tensor<T>*>& tensors) {
    Group g;
    for (auto* t : tensors) {
      g.m.emplace_back(t->shape());
      g.v.emplace_back(t->shape());
    }
    groups_.push_back(std::move(g));
    return static_cast<int>(groups_.size()) - 1;
  }

  void step(int group, const std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads, double lr) {
    auto& g = groups_.at(static_cast<std::size_t>(group));
    ++g.step;
    const double bc1 = 1.0 - std::pow(beta1_, g.step);
    const double bc2 = 1.0 - std::pow(beta2_, g.step);
    for (std::size_t t = 0; t < params.size(); ++t) {
      auto& p = *params[t];
      const auto& d = *grads[t];
      auto& m = g.m[t];
      auto& v = g.v[t];
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double gi = static_cast<double>(d[i]);
        const double mi = beta1_ * static_cast<double>(m[i]) + (1.0 - beta1_) * gi;
        const double vi = beta2_ * static_cast<double>(v[i]) + (1.0 - beta2_) * gi * gi;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        const double update = lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps_);
        p[i] = static_cast<T>(static_cast<double>(p[i]) - update);
      }
    }
  }

  int group_steps(int group) const { return groups_.at(static_cast<std::size_t>(group)).step; }

  /// Moments and step counters as little-endian bytes.
  std::vector<std::uint8_t> serialize() const {
    std::vector<std::uint8_t> out;
    auto put32 = [&out](std::uint32_t v) {
      for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
    };
    put32(static_cast<std::uint32_t>(groups_.size()));
    for (const auto& g : groups_) {
      put32(static_cast<std::uint32_t>(g.step));
      put32(static_cast<std::uint32_t>(g.m.size()));
      for (const auto* moments : {&g.m, &g.v})
        for (const auto& t : *moments)
          for (std::size_t i = 0; i < t.size(); ++i) {
            const float f = static_cast<float>(t[i]);
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            put32(bits);
          }
    }
    return out;
  }

 private:
  struct Group {
    int step = 0;
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;
  };
  double beta1_, beta2_, eps_;
  std::vector<Group> groups_;
};

// ---------------------------------------------------------------------------
// Training loop

struct TrainHooks {
  /// Called at every history point.
  std::function<void(const HistoryPoint&)> on_history;
  /// Called every checkpoint_interval iterations with the optimizer state.
  std::function<void(int iteration, const BackboneParams<float>& shared, const std::vector<CaFMSet<float>>& cafms,
                     const std::vector<std::uint8_t>& optimizer_state)>
      on_checkpoint;
};

namespace detail {

inline constexpr std::uint64_t kSamplingSalt = 0xC0FFEE123456789ULL;

inline std::uint64_t sampling_seed(std::uint64_t seed, std::uint64_t stream) {
  return derive_seed(seed ^ kSamplingSalt, stream);
}

template <typename T>
std::vector<Tensor<T>*> shared_tensors(BackboneParams<T>& p) {
  std::vector<Tensor<T>*> out;
  for (auto& e : p.tensors) out.push_back(&e.tensor);
  return out;
}

template <typename T>
std::vector<Tensor<T>*> cafm_tensors(CaFMSet<T>& s) {
  std::vector<Tensor<T>*> out;
  for (auto& e : s.entries) {
    out.push_back(&e.scale);
    out.push_back(&e.bias);
  }
  return out;
}

template <typename T>
std::vector<const Tensor<T>*> const_view(const std::vector<Tensor<T>*>& v) {
  return {v.begin(), v.end()};
}

template <typename T>
double mean_psnr(const BackboneParams<T>& shared, const std::vector<CaFMSet<T>>& cafms,
                 const std::vector<ChunkDataset>& eval_sets) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < eval_sets.size(); ++i) {
    const CaFMSet<T>* cafm = cafms.empty() ? nullptr : &cafms.at(i);
    for (const auto& pair : eval_sets[i].pairs) {
      sum += psnr(*pair.hr, super_resolve(shared, cafm, *pair.lr));
      ++count;
    }
  }
  return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(count);
}

/// A drawn training sample: which chunk it belongs to and the patch pair.
struct Sample {
  int chunk = 0;
  PatchPair patch;
};

/// Shared machinery of every regime.
///   train_shared  update W_s
///   cafms         modulation sets (may be empty); sets are trainable
///   draw          produces one batch
template <typename T>
void optimize(BackboneParams<T>& shared, bool train_shared, std::vector<CaFMSet<T>>& cafms,
              const std::function<std::vector<Sample>(Rng&)>& draw, Rng& rng, const TrainConfig& config,
              const std::vector<ChunkDataset>& eval_sets, std::vector<HistoryPoint>& history,
              const TrainHooks& hooks, int eval_chunk = -1) {
  Adam<T> adam(config.beta1, config.beta2, config.eps);
  auto shared_ptrs = shared_tensors(shared);
  const int shared_group = train_shared ? adam.add_group(shared_ptrs) : -1;
  std::vector<std::vector<Tensor<T>*>> cafm_ptrs;
  std::vector<int> cafm_groups;
  for (auto& set : cafms) {
    cafm_ptrs.push_back(cafm_tensors(set));
    cafm_groups.push_back(adam.add_group(cafm_ptrs.back()));
  }

  double running = 0.0;
  int running_count = 0;
  auto record = [&](int iteration) {
    HistoryPoint h{iteration, running_count ? running / running_count : 0.0, 0.0};
    if (eval_chunk >= 0) {
      h.psnr = mean_psnr(shared, cafms, {eval_sets.at(static_cast<std::size_t>(eval_chunk))});
    } else {
      h.psnr = mean_psnr(shared, cafms, eval_sets);
    }
    history.push_back(h);
    if (hooks.on_history) hooks.on_history(h);
    running = 0.0;
    running_count = 0;
  };

  for (int it = 0; it < config.iterations; ++it) {
    const auto batch = draw(rng);
    std::vector<int> per_chunk(std::max<std::size_t>(cafms.size(), 1), 0);
    for (const auto& s : batch) ++per_chunk[cafms.empty() ? 0 : s.chunk];

    auto shared_grads = zero_grads(shared);
    std::vector<CaFMSet<T>> cafm_grads;
    for (const auto& set : cafms) cafm_grads.push_back(zero_grads(set));
    std::vector<double> chunk_sums(per_chunk.size(), 0.0);

    for (const auto& s : batch) {
      const int slot = cafms.empty() ? 0 : s.chunk;
      const CaFMSet<T>* cafm = cafms.empty() ? nullptr : &cafms[slot];
      const Tensor<T> lr = s.patch.lr.template cast<T>();
      const auto tape = forward_tape(shared, cafm, lr);
      const auto& sr = tape.values[shared.arch.output];
      const auto& hr = s.patch.hr;
      if (sr.shape() != hr.shape()) fail(ErrorCode::kLoss, "network output does not match HR patch");
      // d/d(sr) of mean|hr - sr| / count_i.
      const double norm = 1.0 / (static_cast<double>(sr.size()) * per_chunk[slot]);
      Tensor<T> dout(sr.shape());
      double abs_sum = 0.0;
      for (std::size_t j = 0; j < sr.size(); ++j) {
        const double d = static_cast<double>(sr[j]) - static_cast<double>(hr[j]);
        abs_sum += std::abs(d);
        dout[j] = static_cast<T>(d > 0 ? norm : (d < 0 ? -norm : 0.0));
      }
      chunk_sums[slot] += abs_sum / static_cast<double>(sr.size());
      backward(shared, cafm, tape, dout, train_shared ? &shared_grads : nullptr,
               cafms.empty() ? nullptr : &cafm_grads[slot]);
    }

    std::vector<double> losses;
    for (std::size_t c = 0; c < per_chunk.size(); ++c)
      if (per_chunk[c] > 0) losses.push_back(chunk_sums[c] / per_chunk[c]);
    const double loss = total_loss(losses);
    if (!std::isfinite(loss)) fail(ErrorCode::kDivergence, "non-finite loss at iteration " + std::to_string(it));

    const double lr_now = learning_rate_at(config, it);
    if (train_shared) {
      std::vector<const Tensor<T>*> g;
      for (auto& t : shared_grads) g.push_back(&t);
      adam.step(shared_group, shared_ptrs, g, lr_now);
    }
    for (std::size_t c = 0; c < cafms.size(); ++c) {
      if (per_chunk[c] == 0) continue;
      adam.step(cafm_groups[c], cafm_ptrs[c], const_view(cafm_tensors(cafm_grads[c])), lr_now);
    }
    if (!shared.all_finite()) fail(ErrorCode::kDivergence, "non-finite weights at iteration " + std::to_string(it));

    running += loss;
    ++running_count;
    if (hooks.on_checkpoint && config.checkpoint_interval > 0 && (it + 1) % config.checkpoint_interval == 0) {
      if constexpr (std::is_same_v<T, float>) {
        hooks.on_checkpoint(it + 1, shared, cafms, adam.serialize());
      } else {
        std::vector<CaFMSet<float>> sets;
        for (const auto& c : cafms) sets.push_back(c.template cast<float>());
        hooks.on_checkpoint(it + 1, shared.template cast<float>(), sets, adam.serialize());
      }
    }
    if (config.eval_interval > 0 && (it + 1) % config.eval_interval == 0 && it + 1 != config.iterations)
      record(it + 1);
  }
  record(config.iterations);
}

}  // namespace detail

/// One backbone on the union of all chunks.
template <typename T = float>
TrainedModel<T> train_m0(const ChunkDataset& data, const TrainConfig& config, const BackboneConfig& backbone,
                         const std::vector<ChunkDataset>& eval_sets = {}, const TrainHooks& hooks = {},
                         std::uint64_t sampling_stream = 0) {
  validate(config);
  TrainedModel<T> model{build_backbone<T>(backbone, config.seed), {}, {}};
  Rng rng(detail::sampling_seed(config.seed, sampling_stream));
  std::vector<CaFMSet<T>> none;
  auto draw = [&](Rng& r) {
    std::vector<detail::Sample> batch;
    for (int b = 0; b < config.batch; ++b) batch.push_back({0, sample_patch(data, config.patch_lr, r)});
    return batch;
  };
  detail::optimize<T>(model.shared, true, none, draw, rng, config, eval_sets, model.history, hooks);
  return model;
}

/// One independent backbone per chunk. Every model starts from the same
/// initialization (config.seed); chunk i samples with stream i.
template <typename T = float>
std::vector<TrainedModel<T>> train_separate(const std::vector<ChunkDataset>& datasets, const TrainConfig& config,
                                            const BackboneConfig& backbone,
                                            const std::vector<ChunkDataset>& eval_sets = {},
                                            const TrainHooks& hooks = {}) {
  std::vector<TrainedModel<T>> out;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    std::vector<ChunkDataset> eval;
    if (i < eval_sets.size()) eval.push_back(eval_sets[i]);
    out.push_back(train_m0<T>(datasets[i], config, backbone, eval, hooks, i));
  }
  return out;
}

/// Freezes m0's backbone and fits one identity-initialized modulation set per
/// chunk on that chunk's data.
template <typename T = float>
TrainedModel<T> finetune_cafm(const TrainedModel<T>& m0, const std::vector<ChunkDataset>& datasets,
                              const TrainConfig& config, const std::vector<ChunkDataset>& eval_sets = {},
                              const TrainHooks& hooks = {}) {
  validate(config);
  TrainedModel<T> model{m0.shared, {}, {}};
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    std::vector<CaFMSet<T>> one{make_identity_cafm<T>(m0.shared.arch, config.kernel, static_cast<int>(i))};
    Rng rng(detail::sampling_seed(config.seed, i));
    const auto& data = datasets[i];
    auto draw = [&](Rng& r) {
      std::vector<detail::Sample> batch;
      for (int b = 0; b < config.batch; ++b) batch.push_back({0, sample_patch(data, config.patch_lr, r)});
      return batch;
    };
    std::vector<ChunkDataset> eval;
    if (i < eval_sets.size()) eval.push_back(eval_sets[i]);
    std::vector<HistoryPoint> history;
    detail::optimize<T>(model.shared, false, one, draw, rng, config, eval, history, hooks);
    model.history.insert(model.history.end(), history.begin(), history.end());
    model.cafms.push_back(std::move(one.front()));
  }
  return model;
}

/// Joint training: every batch element picks its chunk uniformly, its loss
/// reaches W_s and only that chunk's modulation set.
template <typename T = float>
TrainedModel<T> train_joint(const std::vector<ChunkDataset>& datasets, const TrainConfig& config,
                            const BackboneConfig& backbone, const std::vector<ChunkDataset>& eval_sets = {},
                            const TrainHooks& hooks = {}) {
  validate(config);
  if (datasets.empty()) fail(ErrorCode::kConfig, "joint training needs at least one chunk");
  TrainedModel<T> model{build_backbone<T>(backbone, config.seed), {}, {}};
  for (std::size_t i = 0; i < datasets.size(); ++i)
    model.cafms.push_back(make_identity_cafm<T>(model.shared.arch, config.kernel, static_cast<int>(i)));
  Rng rng(detail::sampling_seed(config.seed, 0));
  auto draw = [&](Rng& r) {
    std::vector<detail::Sample> batch;
    for (int b = 0; b < config.batch; ++b) {
      const int chunk = static_cast<int>(r.below(datasets.size()));
      batch.push_back({chunk, sample_patch(datasets[static_cast<std::size_t>(chunk)], config.patch_lr, r)});
    }
    return batch;
  };
  detail::optimize<T>(model.shared, true, model.cafms, draw, rng, config, eval_sets, model.history, hooks);
  return model;
}

/// One optimization step on an explicit batch (used to audit gradient
/// routing). Returns the batch loss.
template <typename T>
double joint_step(TrainedModel<T>& model, const std::vector<std::pair<int, PatchPair>>& batch,
                  const TrainConfig& config) {
  auto draw = [&](Rng&) {
    std::vector<detail::Sample> out;
    for (const auto& [chunk, patch] : batch) out.push_back({chunk, patch});
    return out;
  };
  TrainConfig one = config;
  one.iterations = 1;
  one.eval_interval = 0;
  Rng rng(0);
  std::vector<HistoryPoint> history;
  detail::optimize<T>(model.shared, true, model.cafms, draw, rng, one, {}, history, {});
  return history.back().loss;
}

/// Sum over chunks of the mean per-pixel L1 loss on an explicit batch, and
/// its gradients (shared + one set per chunk). Used for gradient checks.
template <typename T>
double joint_loss_and_grads(const TrainedModel<T>& model, const std::vector<std::pair<int, PatchPair>>& batch,
                            std::vector<Tensor<T>>* shared_grads, std::vector<CaFMSet<T>>* cafm_grads) {
  std::vector<int> per_chunk(model.cafms.size(), 0);
  for (const auto& [c, p] : batch) ++per_chunk.at(static_cast<std::size_t>(c));
  if (shared_grads) *shared_grads = zero_grads(model.shared);
  if (cafm_grads) {
    cafm_grads->clear();
    for (const auto& s : model.cafms) cafm_grads->push_back(zero_grads(s));
  }
  std::vector<double> sums(model.cafms.size(), 0.0);
  for (const auto& [c, p] : batch) {
    const auto lr = p.lr.template cast<T>();
    const auto hr = p.hr.template cast<T>();
    const auto tape = forward_tape(model.shared, &model.cafms[c], lr);
    const auto& sr = tape.values[model.shared.arch.output];
    const double norm = 1.0 / (static_cast<double>(sr.size()) * per_chunk[c]);
    Tensor<T> dout(sr.shape());
    double abs_sum = 0.0;
    for (std::size_t j = 0; j < sr.size(); ++j) {
      const double d = static_cast<double>(sr[j]) - static_cast<double>(hr[j]);
      abs_sum += std::abs(d);
      dout[j] = static_cast<T>(d > 0 ? norm : (d < 0 ? -norm : 0.0));
    }
    sums[c] += abs_sum / static_cast<double>(sr.size());
    if (shared_grads || cafm_grads)
      backward(model.shared, &model.cafms[c], tape, dout, shared_grads,
               cafm_grads ? &(*cafm_grads)[c] : nullptr);
  }
  std::vector<double> losses;
  for (std::size_t c = 0; c < sums.size(); ++c)
    if (per_chunk[c] > 0) losses.push_back(sums[c] / per_chunk[c]);
  return total_loss(losses);
}

}  // namespace cafm
