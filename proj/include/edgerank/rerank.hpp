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

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "edgerank/domain.hpp"
#include "edgerank/model.hpp"

namespace edgerank::rerank {

// LR = sum_i s_i * (alpha * p_ev_i + beta * p_like_i), s_1 = 1,
// s_i = prod_{j<i} p_has_next_j.
double list_reward(std::span<const PredictionTriple> step_predictions, double alpha, double beta);

// min / max of the beam scores; 0 when max <= 0.
double stability(std::span<const double> beam_scores);

// Predictions for candidates[target] placed right after candidates[prefix...].
// Implementations must be safe to call concurrently.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual PredictionTriple predict(const CandidateSet& candidates, std::span<const int> prefix,
                                   int target) const = 0;
};

class FunctionScorer final : public Scorer {
 public:
  using Fn = std::function<PredictionTriple(const CandidateSet&, std::span<const int>, int)>;
  explicit FunctionScorer(Fn fn) : fn_(std::move(fn)) {}
  PredictionTriple predict(const CandidateSet& candidates, std::span<const int> prefix,
                           int target) const override {
    return fn_(candidates, prefix, target);
  }

 private:
  Fn fn_;
};

// Runs the ranking model with the placed prefix as the ordered-candidates input.
class ModelScorer final : public Scorer {
 public:
  ModelScorer(const model::ModelParams<float>& params, const WatchHistory& history,
              const ClientContext& ctx)
      : params_(params), history_(history), ctx_(ctx) {}

  PredictionTriple predict(const CandidateSet& candidates, std::span<const int> prefix,
                           int target) const override;

 private:
  const model::ModelParams<float>& params_;
  const WatchHistory& history_;
  ClientContext ctx_;
};

struct ScoredPrefix {
  std::vector<int> indices;
  double list_reward = 0.0;
  std::vector<PredictionTriple> step_predictions;
  double survival = 1.0;  // product of p_has_next over placed items
};

// LR descending, then lexicographic index order.
bool better(const ScoredPrefix& a, const ScoredPrefix& b);

// Entries sorted by `better`; all prefixes have the same length.
struct BeamState {
  std::vector<ScoredPrefix> entries;
  std::vector<double> scores() const;
};

struct StepTrace {
  int step = 0;
  std::vector<double> beam_scores;  // sorted descending
  double stability = 0.0;
  std::int64_t model_calls = 0;
};

struct RerankResult {
  std::vector<int> order;  // first n_show indices of the best prefix
  ScoredPrefix best;
  BeamState final_beam;
  std::vector<StepTrace> trace;
  int steps = 0;
  bool early_stopped = false;
  std::int64_t model_calls = 0;
};

RerankResult adaptive_beam_search(const CandidateSet& candidates, const Scorer& scorer,
                                  const RerankConfig& config);

// Point-wise baseline: stable sort by alpha * p_ev + beta * p_like with an
// empty prefix. Fills `predictions` (indexed by candidate) when non-null.
std::vector<int> greedy_rank(const CandidateSet& candidates, const Scorer& scorer, double alpha,
                             double beta, std::vector<PredictionTriple>* predictions = nullptr);

inline constexpr std::size_t kBruteForceMaxCandidates = 7;

struct OptimalList {
  std::vector<int> order;
  double list_reward = 0.0;
};

// Exact maximum of LR over all full permutations (ties: lexicographic).
OptimalList brute_force_optimal(const CandidateSet& candidates, const Scorer& scorer, double alpha,
                                double beta);

}  // namespace edgerank::rerank
