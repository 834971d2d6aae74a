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

#include <gtest/gtest.h>

#include <set>

#include "edgerank/rerank.hpp"
#include "test_support.hpp"

namespace edgerank::rerank {
namespace {

using testing::context_dependent_stub;
using testing::context_independent_stub;

RerankConfig exhaustive_config(int m) {
  RerankConfig c;
  int k = 1;
  for (int i = 2; i <= m; ++i) k *= i;
  c.beam_size_k = k;
  c.stability_threshold_t = std::nullopt;
  c.n_show = 1;
  return c;
}

std::vector<PredictionTriple> random_table(Rng& rng, int m) {
  std::vector<PredictionTriple> t(m);
  for (auto& p : t) p = {uniform(rng, 0.05, 0.95), uniform01(rng), uniform(rng, 0.0, 0.5)};
  return t;
}

TEST(ListReward, SingleItem) {
  const PredictionTriple p[] = {{0.9, 0.8, 0.1}};
  EXPECT_NEAR(list_reward(p, 1, 1), 0.9, 1e-15);
}

TEST(ListReward, TwoItemsDiscountedBySurvival) {
  const PredictionTriple p[] = {{0.5, 0.6, 0.0}, {0.3, 0.4, 0.2}};
  EXPECT_NEAR(list_reward(p, 1, 1), 0.6 + 0.5 * 0.6, 1e-15);
}

TEST(ListReward, ZeroWeights) {
  Rng rng(1);
  const auto t = random_table(rng, 6);
  EXPECT_EQ(list_reward(t, 0, 0), 0.0);
}

TEST(ListReward, NonNegativeAndNonDecreasingInLength) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto t = random_table(rng, 1 + static_cast<int>(rng() % 8));
    double prev = 0.0;
    for (std::size_t n = 1; n <= t.size(); ++n) {
      const double lr = list_reward(std::span(t).first(n), 0.7, 1.3);
      EXPECT_GE(lr, prev);
      prev = lr;
    }
  }
}

TEST(Stability, Examples) {
  const double equal[] = {0.5, 0.5};
  const double half[] = {2.0, 1.0};
  const double single[] = {0.3};
  const double degenerate[] = {0.0, 0.0};
  EXPECT_EQ(stability(equal), 1.0);
  EXPECT_EQ(stability(half), 0.5);
  EXPECT_EQ(stability(single), 1.0);
  EXPECT_EQ(stability(degenerate), 0.0);
}

TEST(BeamSearch, SingleCandidate) {
  Rng rng(3);
  const auto cands = testing::random_candidates(rng, 1);
  const auto scorer = context_dependent_stub(4);
  const auto r = adaptive_beam_search(cands, scorer, RerankConfig{});
  EXPECT_EQ(r.order, std::vector<int>{0});
}

TEST(BeamSearch, RejectsTooFewCandidates) {
  Rng rng(3);
  const auto cands = testing::random_candidates(rng, 2);
  RerankConfig c;
  c.n_show = 3;
  EXPECT_THROW(adaptive_beam_search(cands, context_dependent_stub(1), c), ContractViolation);
  EXPECT_THROW(adaptive_beam_search({}, context_dependent_stub(1), RerankConfig{}),
               ContractViolation);
}

TEST(BeamSearch, ExhaustiveMatchesBruteForce) {
  Rng rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    const auto cands = testing::random_candidates(rng, 4);
    const auto scorer = context_dependent_stub(1000 + trial);
    const auto beam = adaptive_beam_search(cands, scorer, exhaustive_config(4));
    const auto oracle = brute_force_optimal(cands, scorer, 1, 1);
    EXPECT_NEAR(beam.best.list_reward, oracle.list_reward, 1e-9);
    EXPECT_EQ(beam.best.indices, oracle.order);
  }
}

TEST(BeamSearch, NeverExceedsBruteForce) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 5);
    const auto cands = testing::random_candidates(rng, m);
    const auto scorer = context_dependent_stub(2000 + trial);
    RerankConfig c;
    c.beam_size_k = 1 + static_cast<int>(rng() % 6);
    c.stability_threshold_t = std::nullopt;
    const auto oracle = brute_force_optimal(cands, scorer, 1, 1);
    for (auto sel : {BeamSelection::kNested, BeamSelection::kTopK}) {
      c.selection = sel;
      const auto beam = adaptive_beam_search(cands, scorer, c);
      EXPECT_LE(beam.best.list_reward, oracle.list_reward + 1e-12);
    }
  }
}

// Exchange argument: swapping adjacent items i, j is an improvement iff
// r_i (1 - h_j) < r_j (1 - h_i), so the optimum sorts by r / (1 - h).
std::vector<int> ratio_order(const std::vector<PredictionTriple>& t, double alpha, double beta) {
  std::vector<int> order(t.size());
  std::iota(order.begin(), order.end(), 0);
  const auto key = [&](int i) {
    return (alpha * t[i].p_effective_view + beta * t[i].p_like) / (1.0 - t[i].p_has_next);
  };
  std::sort(order.begin(), order.end(), [&](int a, int b) { return key(a) > key(b); });
  return order;
}

TEST(BeamSearch, ContextIndependentExhaustiveOrderIsRatioSort) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto cands = testing::random_candidates(rng, 5);
    const auto table = random_table(rng, 5);
    const auto scorer = context_independent_stub(table);
    const auto beam = adaptive_beam_search(cands, scorer, exhaustive_config(5));
    EXPECT_EQ(beam.best.indices, ratio_order(table, 1, 1));
    EXPECT_EQ(brute_force_optimal(cands, scorer, 1, 1).order, ratio_order(table, 1, 1));
  }
}

TEST(BeamSearch, MonotoneInBeamWidth) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 8);
    const auto cands = testing::random_candidates(rng, m);
    const auto scorer = context_dependent_stub(3000 + trial);
    RerankConfig c;
    c.stability_threshold_t = std::nullopt;
    double prev = -1.0;
    for (int k : {1, 2, 4, 8}) {
      c.beam_size_k = k;
      const double lr = adaptive_beam_search(cands, scorer, c).best.list_reward;
      EXPECT_GE(lr, prev) << "trial " << trial << " k " << k;
      prev = lr;
    }
  }
}

TEST(BeamSearch, EarlyStopWithEqualBeams) {
  Rng rng(9);
  const auto cands = testing::random_candidates(rng, 9);
  const auto scorer = context_independent_stub(std::vector<PredictionTriple>(9, {0.8, 0.5, 0.1}));
  RerankConfig c;
  c.stability_threshold_t = 1.0 - 1e-12;
  for (int n_show : {1, 2, 3}) {
    c.n_show = n_show;
    const auto r = adaptive_beam_search(cands, scorer, c);
    EXPECT_EQ(r.steps, n_show);
    EXPECT_EQ(r.order.size(), static_cast<std::size_t>(n_show));
  }
  c.n_show = 1;
  c.stability_threshold_t = std::nullopt;
  EXPECT_EQ(adaptive_beam_search(cands, scorer, c).steps, c.max_steps);
  const auto short_set = testing::random_candidates(rng, 3);
  EXPECT_EQ(adaptive_beam_search(short_set, context_dependent_stub(1), c).steps, 3);
}

TEST(BeamSearch, PrefixValidityAndStoredRewardsAreConsistent) {
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 9);
    const auto cands = testing::random_candidates(rng, m);
    const auto scorer = context_dependent_stub(4000 + trial);
    RerankConfig c;
    c.beam_size_k = 1 + static_cast<int>(rng() % 5);
    c.n_show = 1 + static_cast<int>(rng() % m);
    c.alpha = uniform(rng, 0.0, 2.0);
    c.beta = uniform(rng, 0.0, 2.0);
    c.selection = rng() % 2 ? BeamSelection::kNested : BeamSelection::kTopK;
    if (rng() % 2) c.stability_threshold_t = std::nullopt;
    const auto r = adaptive_beam_search(cands, scorer, c);
    ASSERT_EQ(r.order.size(), static_cast<std::size_t>(c.n_show));
    EXPECT_GE(r.steps, c.n_show);
    EXPECT_LE(r.steps, std::max(c.n_show, std::min(m, c.max_steps)));
    EXPECT_LE(r.final_beam.entries.size(), static_cast<std::size_t>(c.beam_size_k));
    for (std::size_t e = 0; e < r.final_beam.entries.size(); ++e) {
      const auto& prefix = r.final_beam.entries[e];
      std::set<int> seen(prefix.indices.begin(), prefix.indices.end());
      EXPECT_EQ(seen.size(), prefix.indices.size());
      for (int i : prefix.indices) {
        EXPECT_GE(i, 0);
        EXPECT_LT(i, m);
      }
      EXPECT_EQ(prefix.indices.size(), static_cast<std::size_t>(r.steps));
      EXPECT_NEAR(list_reward(prefix.step_predictions, c.alpha, c.beta), prefix.list_reward, 1e-9);
      if (e > 0) EXPECT_FALSE(better(prefix, r.final_beam.entries[e - 1]));
    }
    for (const auto& step : r.trace) {
      EXPECT_TRUE(std::is_sorted(step.beam_scores.rbegin(), step.beam_scores.rend()));
      EXPECT_GE(step.stability, 0.0);
      EXPECT_LE(step.stability, 1.0);
    }
  }
}

TEST(BeamSearch, TiesBrokenLexicographically) {
  Rng rng(11);
  const auto cands = testing::random_candidates(rng, 4);
  const auto scorer = context_independent_stub(std::vector<PredictionTriple>(4, {0.5, 0.5, 0.0}));
  RerankConfig c;
  c.stability_threshold_t = std::nullopt;
  const auto r = adaptive_beam_search(cands, scorer, c);
  EXPECT_EQ(r.best.indices, (std::vector<int>{0, 1, 2, 3}));
}

TEST(Greedy, StableOnEqualScores) {
  Rng rng(12);
  const auto cands = testing::random_candidates(rng, 5);
  const auto scorer = context_independent_stub(std::vector<PredictionTriple>(5, {0.5, 0.3, 0.1}));
  EXPECT_EQ(greedy_rank(cands, scorer, 1, 1), (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(Greedy, SortsByCombinedScore) {
  Rng rng(13);
  const auto cands = testing::random_candidates(rng, 3);
  const auto scorer =
      context_independent_stub({{0.5, 0.3, 0.0}, {0.5, 0.9, 0.0}, {0.5, 0.6, 0.0}});
  EXPECT_EQ(greedy_rank(cands, scorer, 1, 1), (std::vector<int>{1, 2, 0}));
}

TEST(Greedy, MatchesWidthOneBeamWithConstantHasNext) {
  Rng rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    auto table = random_table(rng, 5);
    for (auto& p : table) p.p_has_next = 0.7;
    const auto cands = testing::random_candidates(rng, 5);
    const auto scorer = context_independent_stub(table);
    RerankConfig c;
    c.beam_size_k = 1;
    c.stability_threshold_t = std::nullopt;
    EXPECT_EQ(adaptive_beam_search(cands, scorer, c).best.indices, greedy_rank(cands, scorer, 1, 1));
  }
}

TEST(BruteForce, SmallCases) {
  Rng rng(15);
  const auto one = testing::random_candidates(rng, 1);
  EXPECT_EQ(brute_force_optimal(one, context_dependent_stub(1), 1, 1).order, std::vector<int>{0});
  const auto two = testing::random_candidates(rng, 2);
  const auto scorer = context_dependent_stub(2);
  const auto lr = [&](std::vector<int> order) {
    std::vector<PredictionTriple> steps;
    for (std::size_t i = 0; i < order.size(); ++i) {
      steps.push_back(scorer.predict(two, std::span(order).first(i), order[i]));
    }
    return list_reward(steps, 1, 1);
  };
  EXPECT_NEAR(brute_force_optimal(two, scorer, 1, 1).list_reward,
              std::max(lr({0, 1}), lr({1, 0})), 1e-15);
}

TEST(BruteForce, SizeGuard) {
  Rng rng(16);
  const auto cands = testing::random_candidates(rng, 8);
  EXPECT_THROW(brute_force_optimal(cands, context_dependent_stub(1), 1, 1), ContractViolation);
}

TEST(ModelScorer, RunsTheModelWithPrefixContext) {
  const auto params = model::ModelParams<float>::init(model::ModelConfig::desk(), 17);
  Rng rng(18);
  const auto history = testing::random_history(rng, 6);
  const ClientContext ctx{NetCondition::kWifi, 7, history.back().impression_ts_ms + 100};
  const auto cands = testing::random_candidates(rng, 9);
  const ModelScorer scorer(params, history, ctx);
  const auto r = adaptive_beam_search(cands, scorer, RerankConfig{});
  EXPECT_EQ(r.order.size(), 1u);
  const int prefix[] = {r.order[0]};
  const int other = r.order[0] == 0 ? 1 : 0;
  EXPECT_FALSE(scorer.predict(cands, {}, other) == scorer.predict(cands, prefix, other));
}

}  // namespace
}  // namespace edgerank::rerank
