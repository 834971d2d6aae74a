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

#include "edgerank/model.hpp"

namespace edgerank::model {

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::production() {
  ModelConfig c;
  c.features.category_vocab = 600;  // 600 categories x 16 duration buckets < 10k values
  c.heads = 8;
  c.head_dim = 16;
  c.experts = 12;
  c.expert_hidden = 64;
  c.tower_dims = {128, 64, 32, 1};
  return c;
}

void ModelConfig::validate() const {
  features.validate();
  if (heads < 1 || head_dim < 1) throw ConfigError("attention dims must be positive");
  if (experts < 1 || expert_hidden < 1) throw ConfigError("expert dims must be positive");
  if (tower_dims.empty() || tower_dims.back() != 1) {
    throw ConfigError("tower_dims must end with 1");
  }
  for (int d : tower_dims) {
    if (d < 1) throw ConfigError("tower dims must be positive");
  }
  for (double w : loss_weights) {
    if (w < 0.0) throw ConfigError("loss weights must be non-negative");
  }
}

ParamLayout ParamLayout::build(const ModelConfig& c) {
  using Init = TensorInfo::Init;
  ParamLayout L;
  const auto add = [&](const std::string& name, int rows, int cols, Init init) {
    TensorInfo t{name, rows, cols, L.total, init};
    L.total += t.size();
    L.tensors.push_back(std::move(t));
    return static_cast<int>(L.tensors.size()) - 1;
  };
  const auto& f = c.features;
  const int ec = f.category_embed_dim;
  const int ef = f.feedback_embed_dim;
  const int es = f.scalar_embed_dim;
  const int H = f.autodis_buckets;
  const int A = c.attention_dim();

  L.emb_category = add("emb.category", f.category_vocab + 1, ec, Init::kEmbedding);
  L.emb_duration = add("emb.duration", f.duration_buckets, ec, Init::kEmbedding);
  L.emb_feedback = add("emb.feedback", features::kNumFeedbackCodes, ef, Init::kEmbedding);
  L.emb_cross = add("emb.cross", features::kNumCrossCodes, es, Init::kEmbedding);
  L.emb_net = add("emb.net", kNumNetConditions, ef, Init::kEmbedding);
  L.emb_same_category = add("emb.same_category", 2, ef, Init::kEmbedding);
  L.emb_slot = add("emb.slot", f.ordered_max_len + 1, ef, Init::kEmbedding);

  const auto autodis = [&](const std::string& name) {
    AutoDisIds ids;
    ids.projection = add("autodis." + name + ".projection", 1, H, Init::kGlorot);
    ids.transition = add("autodis." + name + ".transition", H, H, Init::kGlorot);
    ids.meta = add("autodis." + name + ".meta", H, es, Init::kEmbedding);
    return ids;
  };
  const char* hist_names[] = {"hist.diff_effective_view", "hist.diff_like", "hist.diff_follow",
                              "hist.time_since",          "hist.position_gap", "hist.watch_ratio"};
  for (int i = 0; i < features::kNumHistoryScalars; ++i) L.hist_autodis[i] = autodis(hist_names[i]);
  const char* ord_names[] = {"ord.effective_view",      "ord.like",      "ord.follow",
                             "ord.diff_effective_view", "ord.diff_like", "ord.diff_follow"};
  for (int i = 0; i < features::kNumOrderedScalars; ++i) L.ord_autodis[i] = autodis(ord_names[i]);
  const char* target_names[] = {"target.effective_view", "target.like", "target.follow"};
  for (std::size_t i = 0; i < ServerScores::kNumRates; ++i) {
    L.target_autodis[i] = autodis(target_names[i]);
  }
  const char* ctx_names[] = {"ctx.position", "ctx.buffer_ratio", "ctx.queue_share"};
  for (int i = 0; i < features::kNumContextScalars; ++i) L.ctx_autodis[i] = autodis(ctx_names[i]);

  L.target_dim = 2 * ec + static_cast<int>(ServerScores::kNumRates) * es;
  L.history_dim = 2 * ec + ef + es + features::kNumHistoryScalars * es +
                  (features::kHistPositionGap + 1) * es;
  L.ordered_dim = 2 * ec + 2 * ef + features::kNumOrderedScalars * es;
  L.context_dim = ef + features::kNumContextScalars * es;
  L.mmoe_dim = 2 * A + L.target_dim + L.context_dim;

  const auto attention = [&](const std::string& name, int token_dim) {
    AttentionIds ids;
    ids.query = add(name + ".query", L.target_dim, A, Init::kGlorot);
    ids.key = add(name + ".key", token_dim, A, Init::kGlorot);
    ids.value = add(name + ".value", token_dim, A, Init::kGlorot);
    ids.output = add(name + ".output", A, A, Init::kGlorot);
    ids.output_bias = add(name + ".output_bias", 1, A, Init::kZero);
    return ids;
  };
  L.hist_attention = attention("mha.history", L.history_dim);
  L.ord_attention = attention("mha.ordered", L.ordered_dim);

  L.experts.weight = add("mmoe.experts.weight", L.mmoe_dim, c.experts * c.expert_hidden,
                         Init::kGlorot);
  L.experts.bias = add("mmoe.experts.bias", 1, c.experts * c.expert_hidden, Init::kZero);
  for (int t = 0; t < kNumTasks; ++t) {
    const std::string task = kTaskNames[t];
    L.gates[t].weight = add("mmoe.gate." + task + ".weight", L.mmoe_dim, c.experts, Init::kGlorot);
    L.gates[t].bias = add("mmoe.gate." + task + ".bias", 1, c.experts, Init::kZero);
    int in = c.expert_hidden;
    for (std::size_t layer = 0; layer < c.tower_dims.size(); ++layer) {
      const std::string prefix = "tower." + task + "." + std::to_string(layer);
      DenseIds d;
      d.weight = add(prefix + ".weight", in, c.tower_dims[layer], Init::kGlorot);
      d.bias = add(prefix + ".bias", 1, c.tower_dims[layer], Init::kZero);
      L.towers[t].push_back(d);
      in = c.tower_dims[layer];
    }
  }
  return L;
}

int ParamLayout::find(const std::string& name) const {
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

double multitask_log_loss(std::span<const PredictionTriple> predictions,
                          std::span<const TaskLabels> labels,
                          const std::array<double, kNumTasks>& weights, double epsilon) {
  require(predictions.size() == labels.size() && !predictions.empty(),
          "multitask_log_loss: size mismatch or empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const std::array<double, kNumTasks> p = {predictions[i].p_has_next,
                                             predictions[i].p_effective_view, predictions[i].p_like};
    const auto y = labels[i].as_array();
    for (int j = 0; j < kNumTasks; ++j) {
      const double pc = std::clamp(p[j], epsilon, 1.0 - epsilon);
      total += weights[j] * (y[j] ? -std::log(pc) : -std::log(1.0 - pc));
    }
  }
  return total / static_cast<double>(predictions.size());
}

}  // namespace edgerank::model
