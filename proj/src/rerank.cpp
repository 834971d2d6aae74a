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

#include "edgerank/rerank.hpp"

#include <algorithm>
#include <numeric>

namespace edgerank::rerank {

double list_reward(std::span<const PredictionTriple> step_predictions, double alpha, double beta) {
  require(alpha >= 0.0 && beta >= 0.0, "list_reward: alpha and beta must be non-negative");
  double survival = 1.0;
  double total = 0.0;
  for (const PredictionTriple& p : step_predictions) {
    total += survival * (alpha * p.p_effective_view + beta * p.p_like);
    survival *= p.p_has_next;
  }
  return total;
}

double stability(std::span<const double> beam_scores) {
  require(!beam_scores.empty(), "stability: empty beam");
  const auto [lo, hi] = std::minmax_element(beam_scores.begin(), beam_scores.end());
  if (*hi <= 0.0) return 0.0;
  return *lo / *hi;
}

PredictionTriple ModelScorer::predict(const CandidateSet& candidates, std::span<const int> prefix,
                                      int target) const {
  std::vector<const Candidate*> ordered;
  ordered.reserve(prefix.size());
  for (int i : prefix) ordered.push_back(&candidates.at(i));
  std::vector<int> categories;
  categories.reserve(candidates.size());
  for (const Candidate& c : candidates) categories.push_back(c.video.category_id);
  const auto bundle = features::build_model_input(params_.config.features, history_, ordered,
                                                  candidates.at(target), ctx_, categories);
  return model::forward(params_, bundle);
}

bool better(const ScoredPrefix& a, const ScoredPrefix& b) {
  if (a.list_reward != b.list_reward) return a.list_reward > b.list_reward;
  return a.indices < b.indices;
}

std::vector<double> BeamState::scores() const {
  std::vector<double> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.list_reward);
  return out;
}

namespace {

ScoredPrefix extend(const ScoredPrefix& parent, int index, const PredictionTriple& p, double alpha,
                    double beta) {
  ScoredPrefix out;
  out.indices = parent.indices;
  out.indices.push_back(index);
  out.step_predictions = parent.step_predictions;
  out.step_predictions.push_back(p);
  out.list_reward =
      parent.list_reward + parent.survival * (alpha * p.p_effective_view + beta * p.p_like);
  out.survival = parent.survival * p.p_has_next;
  return out;
}

// All one-item extensions of `parent`, sorted by `better`.
std::vector<ScoredPrefix> expand(const CandidateSet& candidates, const Scorer& scorer,
                                 const ScoredPrefix& parent, const RerankConfig& config,
                                 std::int64_t& calls) {
  std::vector<char> used(candidates.size(), 0);
  for (int i : parent.indices) used[i] = 1;
  std::vector<ScoredPrefix> out;
  out.reserve(candidates.size() - parent.indices.size());
  for (int c = 0; c < static_cast<int>(candidates.size()); ++c) {
    if (used[c]) continue;
    const PredictionTriple p = scorer.predict(candidates, parent.indices, c);
    ++calls;
    out.push_back(extend(parent, c, p, config.alpha, config.beta));
  }
  std::sort(out.begin(), out.end(), better);
  return out;
}

std::vector<ScoredPrefix> select_nested(std::vector<std::vector<ScoredPrefix>>& pools, int k) {
  std::vector<std::size_t> head(pools.size(), 0);
  std::vector<ScoredPrefix> out;
  for (int slot = 0; slot < k; ++slot) {
    const std::size_t reach = std::min<std::size_t>(slot + 1, pools.size());
    int pick = -1;
    for (std::size_t j = 0; j < reach; ++j) {
      if (head[j] >= pools[j].size()) continue;
      if (pick < 0 || better(pools[j][head[j]], pools[pick][head[pick]])) pick = static_cast<int>(j);
    }
    if (pick < 0) {
      if (reach == pools.size()) break;
      continue;
    }
    out.push_back(std::move(pools[pick][head[pick]++]));
  }
  return out;
}

std::vector<ScoredPrefix> select_topk(std::vector<std::vector<ScoredPrefix>>& pools, int k) {
  std::vector<ScoredPrefix> all;
  for (auto& pool : pools) std::move(pool.begin(), pool.end(), std::back_inserter(all));
  const std::size_t keep = std::min<std::size_t>(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), better);
  all.resize(keep);
  return all;
}

}  // namespace

RerankResult adaptive_beam_search(const CandidateSet& candidates, const Scorer& scorer,
                                  const RerankConfig& config) {
  config.validate();
  require(!candidates.empty(), "adaptive_beam_search: empty candidate set");
  const int m = static_cast<int>(candidates.size());
  require(config.n_show <= m, "adaptive_beam_search: n_show exceeds candidate count");
  const int max_steps = std::max(config.n_show, std::min(m, config.max_steps));

  RerankResult result;
  // Slots keep their selection order; nested selection relies on it.
  std::vector<ScoredPrefix> slots(1);
  for (int step = 1; step <= max_steps; ++step) {
    StepTrace trace;
    trace.step = step;
    std::vector<std::vector<ScoredPrefix>> pools;
    pools.reserve(slots.size());
    for (const ScoredPrefix& parent : slots) {
      pools.push_back(expand(candidates, scorer, parent, config, trace.model_calls));
    }
    slots = config.selection == BeamSelection::kNested ? select_nested(pools, config.beam_size_k)
                                                       : select_topk(pools, config.beam_size_k);
    result.final_beam.entries = slots;
    std::sort(result.final_beam.entries.begin(), result.final_beam.entries.end(), better);
    trace.beam_scores = result.final_beam.scores();
    trace.stability = stability(trace.beam_scores);
    result.model_calls += trace.model_calls;
    result.steps = step;
    const bool stable = config.stability_threshold_t.has_value() &&
                        trace.stability >= *config.stability_threshold_t;
    result.trace.push_back(std::move(trace));
    if (step >= config.n_show && stable && step < max_steps) {
      result.early_stopped = true;
      break;
    }
  }
  result.best = result.final_beam.entries.front();
  result.order.assign(result.best.indices.begin(), result.best.indices.begin() + config.n_show);
  return result;
}

std::vector<int> greedy_rank(const CandidateSet& candidates, const Scorer& scorer, double alpha,
                             double beta, std::vector<PredictionTriple>* predictions) {
  require(!candidates.empty(), "greedy_rank: empty candidate set");
  const int m = static_cast<int>(candidates.size());
  std::vector<PredictionTriple> preds(m);
  std::vector<double> score(m);
  for (int i = 0; i < m; ++i) {
    preds[i] = scorer.predict(candidates, {}, i);
    score[i] = alpha * preds[i].p_effective_view + beta * preds[i].p_like;
  }
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return score[a] > score[b]; });
  if (predictions) *predictions = std::move(preds);
  return order;
}

namespace {

void search_all(const CandidateSet& candidates, const Scorer& scorer, double alpha, double beta,
                const ScoredPrefix& prefix, std::vector<char>& used, OptimalList& best,
                bool& have_best) {
  if (prefix.indices.size() == candidates.size()) {
    if (!have_best || prefix.list_reward > best.list_reward ||
        (prefix.list_reward == best.list_reward && prefix.indices < best.order)) {
      best.order = prefix.indices;
      best.list_reward = prefix.list_reward;
      have_best = true;
    }
    return;
  }
  for (int c = 0; c < static_cast<int>(candidates.size()); ++c) {
    if (used[c]) continue;
    const PredictionTriple p = scorer.predict(candidates, prefix.indices, c);
    used[c] = 1;
    search_all(candidates, scorer, alpha, beta, extend(prefix, c, p, alpha, beta), used, best,
               have_best);
    used[c] = 0;
  }
}

}  // namespace

OptimalList brute_force_optimal(const CandidateSet& candidates, const Scorer& scorer, double alpha,
                                double beta) {
  require(!candidates.empty(), "brute_force_optimal: empty candidate set");
  require(candidates.size() <= kBruteForceMaxCandidates,
          "brute_force_optimal: at most 7 candidates");
  OptimalList best;
  bool have_best = false;
  std::vector<char> used(candidates.size(), 0);
  search_all(candidates, scorer, alpha, beta, ScoredPrefix{}, used, best, have_best);
  return best;
}

}  // namespace edgerank::rerank
