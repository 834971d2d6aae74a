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

// Template definitions for model.hpp.

#include <algorithm>
#include <thread>

namespace edgerank::model {

template <class T>
ModelParams<T> ModelParams<T>::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams<T> p;
  p.config = config;
  p.layout = ParamLayout::build(config);
  p.data.assign(p.layout.total, T(0));
  for (std::size_t i = 0; i < p.layout.tensors.size(); ++i) {
    const TensorInfo& t = p.layout.tensors[i];
    Rng rng(derive_seed(seed, i));
    auto span = p.tensor(static_cast<int>(i));
    switch (t.init) {
      case TensorInfo::Init::kZero:
        break;
      case TensorInfo::Init::kEmbedding:
        for (auto& v : span) v = static_cast<T>(uniform(rng, -0.05, 0.05));
        break;
      case TensorInfo::Init::kGlorot: {
        const double limit = std::sqrt(6.0 / (t.rows + t.cols));
        for (auto& v : span) v = static_cast<T>(uniform(rng, -limit, limit));
        break;
      }
    }
  }
  return p;
}

template <class T>
ForwardNodes build_forward(Tape<T>& tape, const ModelParams<T>& params, const FeatureBundle& b,
                           T* grad) {
  if (b.schema_version != features::kSchemaVersion) {
    throw ContractViolation("feature schema mismatch: bundle '" + b.schema_version +
                            "' vs model '" + features::kSchemaVersion + "'");
  }
  const ParamLayout& L = params.layout;
  const ModelConfig& cfg = params.config;
  const features::FeatureConfig& fc = cfg.features;
  require(b.history.size() == b.history_mask.size() &&
              b.ordered.size() == b.ordered_mask.size(),
          "feature bundle: mask length mismatch");

  const auto P = [&](int id) {
    const TensorInfo& t = L.tensors[id];
    return tape.param(params.data.data() + t.offset, grad ? grad + t.offset : nullptr, t.rows,
                      t.cols);
  };
  std::vector<T> column;
  const auto autodis = [&](const AutoDisIds& ids, const auto& values) {
    column.assign(values.begin(), values.end());
    Var x = tape.constant(static_cast<int>(column.size()), 1, column);
    Var h = tape.leaky_relu(tape.matmul(x, P(ids.projection)), fc.autodis_leaky_slope);
    Var logits =
        tape.add(tape.matmul_bt(h, P(ids.transition)), tape.scale(h, fc.autodis_skip_alpha));
    Var w = tape.softmax_rows(logits, 1.0 / fc.autodis_temperature);
    return tape.matmul(w, P(ids.meta));
  };
  const auto lookup = [&](int table, const std::vector<int>& ids) {
    return tape.gather_rows(P(table), ids);
  };

  // Target video.
  Var target;
  {
    std::vector<Var> parts = {lookup(L.emb_category, {b.target.category}),
                              lookup(L.emb_duration, {b.target.duration_bucket})};
    for (std::size_t r = 0; r < ServerScores::kNumRates; ++r) {
      parts.push_back(autodis(L.target_autodis[r], std::array<T, 1>{T(b.target.pxtr[r])}));
    }
    target = tape.concat_cols(parts);
  }

  // Context: net condition, prospective position, buffered share.
  Var context;
  {
    std::vector<Var> parts = {lookup(L.emb_net, {b.context.net})};
    for (int s = 0; s < features::kNumContextScalars; ++s) {
      parts.push_back(autodis(L.ctx_autodis[s], std::array<T, 1>{T(b.context.scalars[s])}));
    }
    context = tape.concat_cols(parts);
  }

  ForwardNodes nodes;
  const int A = cfg.attention_dim();
  const int dh = cfg.head_dim;

  const auto mha = [&](const AttentionIds& ids, std::optional<Var> tokens,
                       std::vector<Var>& weights) {
    Var heads_cat;
    if (tokens) {
      Var q = tape.matmul(target, P(ids.query));
      Var k = tape.matmul(*tokens, P(ids.key));
      Var v = tape.matmul(*tokens, P(ids.value));
      std::vector<Var> heads;
      for (int h = 0; h < cfg.heads; ++h) {
        Var w;
        heads.push_back(attention(tape, tape.slice_cols(q, h * dh, dh),
                                  tape.slice_cols(k, h * dh, dh),
                                  tape.slice_cols(v, h * dh, dh), {}, &w));
        weights.push_back(w);
      }
      heads_cat = tape.concat_cols(heads);
    } else {
      heads_cat = tape.zeros(1, A);
    }
    return tape.add_bias(tape.matmul(heads_cat, P(ids.output)), P(ids.output_bias));
  };

  // Watch history: masked slots are dropped before projection.
  std::optional<Var> history_tokens;
  if (cfg.use_history) {
    std::vector<int> cat, dur, fb, cross;
    std::array<std::vector<T>, features::kNumHistoryScalars> scalars;
    for (std::size_t i = 0; i < b.history.size(); ++i) {
      if (!b.history_mask[i]) continue;
      const auto& t = b.history[i];
      cat.push_back(t.category);
      dur.push_back(t.duration_bucket);
      fb.push_back(t.feedback_code);
      cross.push_back(t.cross_code);
      for (int s = 0; s < features::kNumHistoryScalars; ++s) scalars[s].push_back(T(t.scalars[s]));
    }
    if (!cat.empty()) {
      Var cross_e = lookup(L.emb_cross, cross);
      std::vector<Var> parts = {lookup(L.emb_category, cat), lookup(L.emb_duration, dur),
                                lookup(L.emb_feedback, fb), cross_e};
      std::array<Var, features::kNumHistoryScalars> embedded;
      for (int s = 0; s < features::kNumHistoryScalars; ++s) {
        embedded[s] = autodis(L.hist_autodis[s], scalars[s]);
        parts.push_back(embedded[s]);
      }
      // pXTR diff, recency and position gap crossed with category x feedback.
      for (int s = 0; s <= features::kHistPositionGap; ++s) {
        parts.push_back(tape.mul(cross_e, embedded[s]));
      }
      history_tokens = tape.concat_cols(parts);
    }
  }

  std::optional<Var> ordered_tokens;
  {
    std::vector<int> cat, dur, slot, same;
    std::array<std::vector<T>, features::kNumOrderedScalars> scalars;
    for (std::size_t i = 0; i < b.ordered.size(); ++i) {
      if (!b.ordered_mask[i]) continue;
      const auto& t = b.ordered[i];
      cat.push_back(t.category);
      dur.push_back(t.duration_bucket);
      slot.push_back(t.slot);
      same.push_back(t.same_category);
      for (int s = 0; s < features::kNumOrderedScalars; ++s) scalars[s].push_back(T(t.scalars[s]));
    }
    if (!cat.empty()) {
      std::vector<Var> parts = {lookup(L.emb_category, cat), lookup(L.emb_duration, dur),
                                lookup(L.emb_slot, slot), lookup(L.emb_same_category, same)};
      for (int s = 0; s < features::kNumOrderedScalars; ++s) {
        parts.push_back(autodis(L.ord_autodis[s], scalars[s]));
      }
      ordered_tokens = tape.concat_cols(parts);
    }
  }

  Var hist_out = mha(L.hist_attention, history_tokens, nodes.history_attention);
  Var ord_out = mha(L.ord_attention, ordered_tokens, nodes.ordered_attention);
  Var x = tape.concat_cols({hist_out, ord_out, target, context});

  // Multi-gate mixture of experts.
  Var experts = tape.relu(tape.add_bias(tape.matmul(x, P(L.experts.weight)), P(L.experts.bias)));
  Var expert_rows = tape.reshape(experts, cfg.experts, cfg.expert_hidden);
  for (int task = 0; task < kNumTasks; ++task) {
    Var gate = tape.softmax_rows(
        tape.add_bias(tape.matmul(x, P(L.gates[task].weight)), P(L.gates[task].bias)));
    nodes.gate[task] = gate;
    Var h = tape.matmul(gate, expert_rows);
    const auto& tower = L.towers[task];
    for (std::size_t layer = 0; layer < tower.size(); ++layer) {
      h = tape.add_bias(tape.matmul(h, P(tower[layer].weight)), P(tower[layer].bias));
      if (layer + 1 < tower.size()) h = tape.relu(h);
    }
    nodes.probability[task] = tape.sigmoid(h);
  }
  return nodes;
}

template <class T>
double loss_and_gradient(const ModelParams<T>& params, std::span<const Example> batch,
                         std::span<T> grad, Tape<T>& scratch, std::size_t normalizer) {
  require(grad.size() == params.data.size(), "loss_and_gradient: gradient size mismatch");
  const double n = static_cast<double>(normalizer ? normalizer : batch.size());
  const auto& w = params.config.loss_weights;
  double total = 0.0;
  for (const Example& ex : batch) {
    scratch.reset();
    const ForwardNodes out = build_forward(scratch, params, ex.bundle, grad.data());
    scratch.begin_backward();
    const auto y = ex.labels.as_array();
    for (int j = 0; j < kNumTasks; ++j) {
      const double p = static_cast<double>(scratch.scalar(out.probability[j]));
      const double pc = std::clamp(p, kLossEpsilon, 1.0 - kLossEpsilon);
      total += w[j] * (y[j] ? -std::log(pc) : -std::log(1.0 - pc));
      double dp = 0.0;
      if (p > kLossEpsilon && p < 1.0 - kLossEpsilon) {
        dp = w[j] * (y[j] ? -1.0 / p : 1.0 / (1.0 - p)) / n;
      }
      scratch.grad(out.probability[j])[0] = static_cast<T>(dp);
    }
    scratch.backward();
  }
  return total / n;
}

template <class T>
double batch_loss(const ModelParams<T>& params, std::span<const Example> batch) {
  std::vector<PredictionTriple> preds;
  std::vector<TaskLabels> labels;
  Tape<T> scratch;
  for (const Example& ex : batch) {
    preds.push_back(forward(params, ex.bundle, scratch));
    labels.push_back(ex.labels);
  }
  return multitask_log_loss(preds, labels, params.config.loss_weights);
}

template <class T>
void adam_update(ModelParams<T>& params, std::span<const T> grad, AdamState<T>& s) {
  const std::size_t n = params.data.size();
  if (s.m.size() != n) {
    s.m.assign(n, T(0));
    s.v.assign(n, T(0));
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    const double m = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
    const double v = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
    s.m[i] = static_cast<T>(m);
    s.v[i] = static_cast<T>(v);
    const double update = s.learning_rate * (m / c1) / (std::sqrt(v / c2) + s.epsilon);
    params.data[i] = static_cast<T>(params.data[i] - update);
  }
}

template <class T>
double train_step(ModelParams<T>& params, std::span<const Example> batch, AdamState<T>& state,
                  int workers, int chunks) {
  require(!batch.empty(), "train_step: empty batch");
  chunks = std::max(1, std::min<int>(chunks, static_cast<int>(batch.size())));
  workers = std::clamp(workers, 1, chunks);
  const std::size_t n = params.data.size();
  std::vector<std::vector<T>> grads(chunks, std::vector<T>(n, T(0)));
  std::vector<double> losses(chunks, 0.0);
  const auto slice = [&](int c) {
    const std::size_t begin = batch.size() * c / chunks;
    const std::size_t end = batch.size() * (c + 1) / chunks;
    return batch.subspan(begin, end - begin);
  };
  const auto run = [&](int worker) {
    Tape<T> tape;
    for (int c = worker; c < chunks; c += workers) {
      losses[c] = loss_and_gradient(params, slice(c), std::span<T>(grads[c]), tape, batch.size());
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }
  std::vector<T>& total = grads[0];
  for (int c = 1; c < chunks; ++c) {
    for (std::size_t i = 0; i < n; ++i) total[i] += grads[c][i];
  }
  for (const TensorInfo& t : params.layout.tensors) {
    for (std::size_t i = t.offset; i < t.offset + t.size(); ++i) {
      if (!std::isfinite(total[i])) {
        throw TrainingDivergence("non-finite gradient in tensor '" + t.name + "' at step " +
                                 std::to_string(state.step + 1));
      }
    }
  }
  double loss = 0.0;
  for (double l : losses) loss += l;
  adam_update(params, std::span<const T>(total), state);
  return loss;
}

}  // namespace edgerank::model
