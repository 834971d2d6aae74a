// Copyright 2026 The EdgeRank Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "edgerank/domain.hpp"

namespace edgerank::features {

// Embedded in every FeatureBundle and in the weights file header.
inline constexpr const char* kSchemaVersion = "edgerank-features-v1";

struct FeatureConfig {
  int history_max_len = 20;
  int ordered_max_len = 5;
  int category_vocab = 64;  // ids >= category_vocab map to the OOV row
  int duration_buckets = 16;
  int autodis_buckets = 16;
  double autodis_temperature = 1.0;
  double autodis_skip_alpha = 0.1;
  double autodis_leaky_slope = 0.01;
  int scalar_embed_dim = 8;
  int category_embed_dim = 16;
  int feedback_embed_dim = 8;

  int oov_category() const { return category_vocab; }
  void validate() const;
  bool operator==(const FeatureConfig&) const = default;
};

// ---- crossing features over one history record --------------------------

// candidate - history, per rate, in [-1, 1].
std::array<double, ServerScores::kNumRates> pxtr_diff(const ServerScores& candidate,
                                                      const ServerScores& history);

struct RecencyGap {
  std::int64_t time_since_ms = 0;
  int position_gap = 1;
};

// target_ctx carries the target's (prospective) impression time and position.
RecencyGap recency_and_gap(const ClientContext& target_ctx, const WatchedRecord& history);

// 4-bit code of the explicit and implicit feedback flags.
inline constexpr int kNumFeedbackCodes = 16;
int feedback_code(const Feedback& feedback);

// (category match x feedback code), plus one reserved OOV code.
inline constexpr int kNumCrossCodes = 2 * kNumFeedbackCodes + 1;
inline constexpr int kCrossOov = 2 * kNumFeedbackCodes;
int cross_with_category_feedback(int target_category, int history_category,
                                 const Feedback& history_feedback, int category_vocab);

struct CrossedHistoryFeature {
  std::array<double, ServerScores::kNumRates> pxtr_diff{};
  std::int64_t time_since_ms = 0;
  int position_gap = 1;
  bool category_match = false;
  int feedback_cross = 0;
};

CrossedHistoryFeature cross_history(const Candidate& target, const ClientContext& target_ctx,
                                    const WatchedRecord& history, int category_vocab);

int category_index(int category_id, int category_vocab);
int duration_bucket(double duration_s, int buckets);

// ---- AutoDis soft discretization ------------------------------------------
//
// h = LeakyReLU(x * w), logits = W h + skip * h, weights = softmax(logits / tau),
// embedding = sum_k weights_k * meta_k.  w: H, W: H x H (row-major), meta: H x d.

template <class T>
struct AutoDisView {
  std::span<const T> projection;  // H
  std::span<const T> transition;  // H x H
  std::span<const T> meta;        // H x d
  int buckets = 0;
  int dim = 0;
};

template <class T>
std::vector<T> autodis_weights(T x, const AutoDisView<T>& p, double temperature,
                               double skip_alpha, double leaky_slope) {
  const int H = p.buckets;
  std::vector<T> h(H), logits(H);
  for (int k = 0; k < H; ++k) {
    const T z = x * p.projection[k];
    h[k] = z > T(0) ? z : T(leaky_slope) * z;
  }
  for (int r = 0; r < H; ++r) {
    T acc = T(skip_alpha) * h[r];
    for (int c = 0; c < H; ++c) acc += p.transition[r * H + c] * h[c];
    logits[r] = acc / T(temperature);
  }
  const T mx = *std::max_element(logits.begin(), logits.end());
  T total = 0;
  for (int k = 0; k < H; ++k) {
    logits[k] = std::exp(logits[k] - mx);
    total += logits[k];
  }
  for (auto& w : logits) w /= total;
  return logits;
}

template <class T>
std::vector<T> autodis_embed(T x, const AutoDisView<T>& p, double temperature,
                             double skip_alpha, double leaky_slope) {
  const auto w = autodis_weights(x, p, temperature, skip_alpha, leaky_slope);
  std::vector<T> out(p.dim, T(0));
  for (int k = 0; k < p.buckets; ++k) {
    for (int d = 0; d < p.dim; ++d) out[d] += w[k] * p.meta[k * p.dim + d];
  }
  return out;
}

// ---- model input ----------------------------------------------------------

enum HistoryScalar : int {
  kHistDiffEffectiveView = 0,
  kHistDiffLike,
  kHistDiffFollow,
  kHistTimeSince,
  kHistPositionGap,
  kHistWatchRatio,
  kNumHistoryScalars
};

enum OrderedScalar : int {
  kOrdEffectiveView = 0,
  kOrdLike,
  kOrdFollow,
  kOrdDiffEffectiveView,
  kOrdDiffLike,
  kOrdDiffFollow,
  kNumOrderedScalars
};

// kCtxQueueShare: fraction of the other unshown candidates at the trigger
// that share the target's category.
enum ContextScalar : int { kCtxPosition = 0, kCtxBufferRatio, kCtxQueueShare, kNumContextScalars };

// Scalars are already normalized to O(1) ranges; the model embeds each one
// through its own AutoDis module.
struct HistoryToken {
  int category = 0;
  int duration_bucket = 0;
  int feedback_code = 0;
  int cross_code = 0;
  std::array<float, kNumHistoryScalars> scalars{};
  bool operator==(const HistoryToken&) const = default;
};

struct OrderedToken {
  int category = 0;
  int duration_bucket = 0;
  int slot = 0;            // 0 = earliest placed
  int same_category = 0;   // 1 if same category as the target
  std::array<float, kNumOrderedScalars> scalars{};
  bool operator==(const OrderedToken&) const = default;
};

struct TargetFeatures {
  int category = 0;
  int duration_bucket = 0;
  std::array<float, ServerScores::kNumRates> pxtr{};
  bool operator==(const TargetFeatures&) const = default;
};

struct ContextFeatures {
  int net = 0;
  std::array<float, kNumContextScalars> scalars{};
  bool operator==(const ContextFeatures&) const = default;
};

// Fixed-length, zero-padded sequences with 0/1 masks.
struct FeatureBundle {
  std::string schema_version = kSchemaVersion;
  std::vector<HistoryToken> history;
  std::vector<std::uint8_t> history_mask;
  std::vector<OrderedToken> ordered;
  std::vector<std::uint8_t> ordered_mask;
  TargetFeatures target;
  ContextFeatures context;

  std::vector<std::uint8_t> to_bytes() const;
  bool operator==(const FeatureBundle&) const = default;
};

// ordered: already-placed candidates, earliest first. queue_categories: the
// category of every unshown candidate at the trigger, target included (empty
// when unknown). Throws ContractViolation on duplicates (by video_id) or on
// clock/position corruption.
FeatureBundle build_model_input(const FeatureConfig& config, const WatchHistory& history,
                                std::span<const Candidate* const> ordered,
                                const Candidate& target, const ClientContext& ctx,
                                std::span<const int> queue_categories = {});

float queue_share(std::span<const int> queue_categories, int target_category);

// Generated schema document listing every feature and its encoding.
std::string feature_schema_json(const FeatureConfig& config);

}  // namespace edgerank::features
