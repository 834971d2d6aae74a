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

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edgerank/common.hpp"
#include "edgerank/domain.hpp"
#include "edgerank/features.hpp"
#include "edgerank/tape.hpp"

// The on-device multi-task ranking model: shared embeddings, AutoDis scalar
// embeddings, two target-attention blocks (watch history, ordered prefix),
// a multi-gate mixture of experts and one tower per task.
namespace edgerank::model {

using autodiff::Tape;
using autodiff::Var;
using features::FeatureBundle;

inline constexpr int kNumTasks = 3;
enum Task : int { kHasNext = 0, kEffectiveView = 1, kLike = 2 };
inline constexpr std::array<const char*, kNumTasks> kTaskNames = {"has_next", "effective_view",
                                                                  "like"};

struct ModelConfig {
  features::FeatureConfig features;
  int heads = 2;
  int head_dim = 8;
  int experts = 4;
  int expert_hidden = 16;
  std::vector<int> tower_dims = {32, 16, 1};
  std::array<double, kNumTasks> loss_weights = {1.0, 1.0, 1.0};
  // false drops the real-time watch-history sequence (ablation).
  bool use_history = true;

  // Small configuration used by tests, the simulator and the demo.
  static ModelConfig desk();
  // Configuration shaped like the deployed model.
  static ModelConfig production();

  int attention_dim() const { return heads * head_dim; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct TensorInfo {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
  enum class Init { kZero, kEmbedding, kGlorot } init = Init::kZero;

  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

struct AutoDisIds {
  int projection = -1;
  int transition = -1;
  int meta = -1;
};

struct AttentionIds {
  int query = -1;
  int key = -1;
  int value = -1;
  int output = -1;
  int output_bias = -1;
};

struct DenseIds {
  int weight = -1;
  int bias = -1;
};

// Tensor directory derived deterministically from a ModelConfig.
struct ParamLayout {
  std::vector<TensorInfo> tensors;
  std::size_t total = 0;

  int emb_category = -1, emb_duration = -1, emb_feedback = -1, emb_cross = -1;
  int emb_net = -1, emb_same_category = -1, emb_slot = -1;
  std::array<AutoDisIds, features::kNumHistoryScalars> hist_autodis{};
  std::array<AutoDisIds, features::kNumOrderedScalars> ord_autodis{};
  std::array<AutoDisIds, ServerScores::kNumRates> target_autodis{};
  std::array<AutoDisIds, features::kNumContextScalars> ctx_autodis{};
  AttentionIds hist_attention, ord_attention;
  DenseIds experts;
  std::array<DenseIds, kNumTasks> gates{};
  std::array<std::vector<DenseIds>, kNumTasks> towers{};

  int target_dim = 0, history_dim = 0, ordered_dim = 0, context_dim = 0, mmoe_dim = 0;

  static ParamLayout build(const ModelConfig& config);
  int find(const std::string& name) const;
};

template <class T>
struct ModelParams {
  ModelConfig config;
  ParamLayout layout;
  std::vector<T> data;

  static ModelParams init(const ModelConfig& config, std::uint64_t seed);

  std::size_t parameter_count() const { return data.size(); }
  std::span<T> tensor(int id) {
    const auto& t = layout.tensors[id];
    return {data.data() + t.offset, t.size()};
  }
  std::span<const T> tensor(int id) const {
    const auto& t = layout.tensors[id];
    return {data.data() + t.offset, t.size()};
  }
  bool all_finite() const {
    for (T v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  template <class U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    out.config = config;
    out.layout = layout;
    out.data.assign(data.begin(), data.end());
    return out;
  }
};

// Intermediate nodes kept for inspection by tests.
struct ForwardNodes {
  std::array<Var, kNumTasks> probability{};
  std::array<Var, kNumTasks> gate{};
  std::vector<Var> history_attention;  // one 1 x T weight row per head
  std::vector<Var> ordered_attention;
};

// Scaled dot-product attention; rows of Q attend over rows of K/V. Keys with
// mask == 0 get zero weight. With every key masked the result is all zeros.
template <class T>
Var attention(Tape<T>& tape, Var q, Var k, Var v, std::span<const std::uint8_t> key_mask = {},
              Var* weights_out = nullptr) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(tape.cols(q)));
  Var w = tape.softmax_rows(tape.scale(tape.matmul_bt(q, k), scale), 1.0, key_mask);
  if (weights_out) *weights_out = w;
  return tape.matmul(w, v);
}

// Records the forward pass on `tape`. Parameter gradients are accumulated
// into `grad` (same layout as params.data) when it is non-null.
template <class T>
ForwardNodes build_forward(Tape<T>& tape, const ModelParams<T>& params, const FeatureBundle& bundle,
                           T* grad = nullptr);

template <class T>
PredictionTriple forward(const ModelParams<T>& params, const FeatureBundle& bundle,
                         Tape<T>& scratch) {
  scratch.reset();
  const ForwardNodes out = build_forward(scratch, params, bundle);
  return {static_cast<double>(scratch.scalar(out.probability[kHasNext])),
          static_cast<double>(scratch.scalar(out.probability[kEffectiveView])),
          static_cast<double>(scratch.scalar(out.probability[kLike]))};
}

// Uses a thread-local scratch tape; safe to call concurrently on shared params.
template <class T>
PredictionTriple forward(const ModelParams<T>& params, const FeatureBundle& bundle) {
  thread_local Tape<T> scratch;
  return forward(params, bundle, scratch);
}

// ---- loss -------------------------------------------------------------------

struct TaskLabels {
  bool has_next = false;
  bool effective_view = false;
  bool like = false;

  std::array<bool, kNumTasks> as_array() const { return {has_next, effective_view, like}; }
};

inline constexpr double kLossEpsilon = 1e-7;

// Weighted sum over tasks of binary cross-entropy, averaged over instances.
double multitask_log_loss(std::span<const PredictionTriple> predictions,
                          std::span<const TaskLabels> labels,
                          const std::array<double, kNumTasks>& weights,
                          double epsilon = kLossEpsilon);

struct Example {
  FeatureBundle bundle;
  TaskLabels labels;
};

// Mean loss over `batch`; gradient (same layout as params.data) is
// accumulated into `grad`, which must be zero-initialized by the caller.
template <class T>
double loss_and_gradient(const ModelParams<T>& params, std::span<const Example> batch,
                         std::span<T> grad, Tape<T>& scratch, std::size_t normalizer = 0);

template <class T>
double batch_loss(const ModelParams<T>& params, std::span<const Example> batch);

// ---- optimization -------------------------------------------------------------

class TrainingDivergence : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

template <class T>
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<T> m;
  std::vector<T> v;
};

template <class T>
void adam_update(ModelParams<T>& params, std::span<const T> grad, AdamState<T>& state);

// One optimizer step over `batch`, with the gradient computed in `chunks`
// fixed slices reduced in order (deterministic regardless of `workers`).
// Throws TrainingDivergence naming the first tensor with a non-finite gradient.
template <class T>
double train_step(ModelParams<T>& params, std::span<const Example> batch, AdamState<T>& state,
                  int workers = 1, int chunks = 8);

}  // namespace edgerank::model

#include "edgerank/model_impl.hpp"
