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

#include <numeric>
#include <set>

#include "edgerank/features.hpp"
#include "edgerank/json_io.hpp"

namespace edgerank::features {
namespace {

Candidate make_candidate(VideoId id, int category, double like = 0.1) {
  return Candidate{{id, category, 45.0}, {0.6, like, 0.02}, 3.0, static_cast<int>(id)};
}

WatchHistory make_history(int n) {
  WatchHistory h(20);
  for (int p = 1; p <= n; ++p) {
    WatchedRecord r;
    r.video = {static_cast<VideoId>(1000 + p), p % 5, 20.0 + p};
    r.server_scores = {0.4, 0.05 * (p % 4), 0.01};
    r.feedback = {p % 2 == 0, p % 3 == 0, false, false, 10.0 + p};
    r.impression_pos = p;
    r.impression_ts_ms = 1'000 + 9'000 * p;
    h.push(r);
  }
  return h;
}

TEST(PxtrDiff, Arithmetic) {
  const auto d = pxtr_diff({0.5, 0.3, 0.1}, {0.5, 0.5, 0.1});
  EXPECT_NEAR(d[1], -0.2, 1e-12);
  EXPECT_EQ(d[0], 0.0);
  EXPECT_EQ(d[2], 0.0);
  EXPECT_EQ(pxtr_diff({1.0, 1.0, 1.0}, {0.0, 0.0, 0.0})[0], 1.0);
}

TEST(PxtrDiff, AntisymmetricAndBounded) {
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const ServerScores a{uniform01(rng), uniform01(rng), uniform01(rng)};
    const ServerScores b{uniform01(rng), uniform01(rng), uniform01(rng)};
    const auto ab = pxtr_diff(a, b);
    const auto ba = pxtr_diff(b, a);
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(ab[k], -ba[k]);
      EXPECT_GE(ab[k], -1.0);
      EXPECT_LE(ab[k], 1.0);
    }
  }
}

TEST(RecencyAndGap, Examples) {
  WatchedRecord r;
  r.impression_ts_ms = 4'000;
  r.impression_pos = 7;
  const auto rg = recency_and_gap({NetCondition::kWifi, 9, 10'000}, r);
  EXPECT_EQ(rg.time_since_ms, 6'000);
  EXPECT_EQ(rg.position_gap, 2);
  EXPECT_EQ(recency_and_gap({NetCondition::kWifi, 8, 10'000}, r).position_gap, 1);
}

TEST(RecencyAndGap, RejectsCorruption) {
  WatchedRecord r;
  r.impression_ts_ms = 4'000;
  r.impression_pos = 7;
  EXPECT_THROW(recency_and_gap({NetCondition::kWifi, 9, 3'999}, r), ContractViolation);
  EXPECT_THROW(recency_and_gap({NetCondition::kWifi, 7, 10'000}, r), ContractViolation);
}

TEST(CrossFeature, DistinctCodesAndOov) {
  const Feedback liked{false, true, false, false, 3.0};
  const Feedback none{};
  const int same_like = cross_with_category_feedback(3, 3, liked, 64);
  const int diff_like = cross_with_category_feedback(3, 4, liked, 64);
  const int diff_none = cross_with_category_feedback(3, 4, none, 64);
  EXPECT_NE(same_like, diff_like);
  EXPECT_NE(diff_like, diff_none);
  EXPECT_EQ(cross_with_category_feedback(3, 999, liked, 64), kCrossOov);
  EXPECT_EQ(cross_with_category_feedback(-1, 3, liked, 64), kCrossOov);

  std::set<int> codes;
  for (int match = 0; match < 2; ++match) {
    for (int f = 0; f < kNumFeedbackCodes; ++f) {
      const Feedback fb{(f & 1) != 0, (f & 2) != 0, (f & 4) != 0, (f & 8) != 0, 0.0};
      const int code = cross_with_category_feedback(1, match ? 1 : 2, fb, 64);
      EXPECT_GE(code, 0);
      EXPECT_LT(code, kNumCrossCodes);
      codes.insert(code);
    }
  }
  EXPECT_EQ(codes.size(), 2u * kNumFeedbackCodes);
}

struct AutoDisFixture {
  explicit AutoDisFixture(int H, int d, std::uint64_t seed) : H(H), d(d) {
    Rng rng(seed);
    projection.resize(H);
    transition.resize(H * H);
    meta.resize(H * d);
    for (auto& v : projection) v = uniform(rng, -2.0, 2.0);
    for (auto& v : transition) v = uniform(rng, -1.0, 1.0);
    for (auto& v : meta) v = uniform(rng, -1.0, 1.0);
  }
  AutoDisView<double> view() const { return {projection, transition, meta, H, d}; }
  int H, d;
  std::vector<double> projection, transition, meta;
};

TEST(AutoDis, WeightsAreConvex) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    AutoDisFixture f(16, 8, seed);
    Rng rng(seed + 100);
    for (int i = 0; i < 50; ++i) {
      const double x = uniform(rng, -5.0, 5.0);
      const auto w = autodis_weights(x, f.view(), 1.0, 0.1, 0.01);
      double total = 0.0;
      for (double v : w) {
        EXPECT_GE(v, 0.0);
        total += v;
      }
      EXPECT_NEAR(total, 1.0, 1e-6);
    }
  }
}

TEST(AutoDis, HighTemperatureGivesMeanEmbedding) {
  AutoDisFixture f(16, 8, 1);
  const auto e = autodis_embed(0.7, f.view(), 1e12, 0.1, 0.01);
  for (int k = 0; k < f.d; ++k) {
    double mean = 0.0;
    for (int h = 0; h < f.H; ++h) mean += f.meta[h * f.d + k];
    EXPECT_NEAR(e[k], mean / f.H, 1e-9);
  }
}

TEST(AutoDis, SingleBucketReturnsMeta) {
  AutoDisFixture f(1, 8, 2);
  for (double x : {-3.0, 0.0, 0.25, 9.0}) {
    const auto e = autodis_embed(x, f.view(), 1.0, 0.1, 0.01);
    for (int k = 0; k < f.d; ++k) EXPECT_EQ(e[k], f.meta[k]);
  }
}

TEST(ModelInput, ColdStartIsFullyMasked) {
  const FeatureConfig cfg;
  const auto target = make_candidate(1, 2);
  const auto b = build_model_input(cfg, WatchHistory(20), {}, target, {NetCondition::kWifi, 1, 0});
  EXPECT_EQ(b.history.size(), static_cast<std::size_t>(cfg.history_max_len));
  EXPECT_EQ(b.ordered.size(), static_cast<std::size_t>(cfg.ordered_max_len));
  EXPECT_EQ(std::accumulate(b.history_mask.begin(), b.history_mask.end(), 0), 0);
  EXPECT_EQ(std::accumulate(b.ordered_mask.begin(), b.ordered_mask.end(), 0), 0);
  EXPECT_EQ(b.schema_version, kSchemaVersion);
}

TEST(ModelInput, DeterministicBytes) {
  const FeatureConfig cfg;
  const auto h = make_history(12);
  const auto a = make_candidate(1, 2), c = make_candidate(2, 3), t = make_candidate(3, 2);
  const Candidate* ordered[] = {&a, &c};
  const ClientContext ctx{NetCondition::kCellGood, 13, 200'000};
  EXPECT_EQ(build_model_input(cfg, h, ordered, t, ctx).to_bytes(),
            build_model_input(cfg, h, ordered, t, ctx).to_bytes());
}

TEST(ModelInput, OrderSensitive) {
  const FeatureConfig cfg;
  const auto h = make_history(3);
  const auto a = make_candidate(1, 2, 0.3), c = make_candidate(2, 3, 0.05);
  const auto t = make_candidate(3, 2);
  const Candidate* ab[] = {&a, &c};
  const Candidate* ba[] = {&c, &a};
  const ClientContext ctx{NetCondition::kWifi, 4, 100'000};
  EXPECT_NE(build_model_input(cfg, h, ab, t, ctx).to_bytes(),
            build_model_input(cfg, h, ba, t, ctx).to_bytes());
}

TEST(ModelInput, RejectsDuplicates) {
  const FeatureConfig cfg;
  const auto a = make_candidate(1, 2), t = make_candidate(3, 2);
  const Candidate* dup[] = {&a, &a};
  const Candidate* with_target[] = {&t};
  const ClientContext ctx{NetCondition::kWifi, 1, 0};
  EXPECT_THROW(build_model_input(cfg, WatchHistory(20), dup, t, ctx), ContractViolation);
  EXPECT_THROW(build_model_input(cfg, WatchHistory(20), with_target, t, ctx), ContractViolation);
}

TEST(ModelInput, TruncatesToConfiguredLengths) {
  FeatureConfig cfg;
  cfg.history_max_len = 4;
  const auto h = make_history(10);
  std::vector<Candidate> placed;
  for (int i = 0; i < 7; ++i) placed.push_back(make_candidate(10 + i, i));
  std::vector<const Candidate*> ordered;
  for (const auto& c : placed) ordered.push_back(&c);
  const auto t = make_candidate(99, 1);
  const auto b = build_model_input(cfg, h, ordered, t, {NetCondition::kWifi, 11, 200'000});
  EXPECT_EQ(b.history.size(), 4u);
  EXPECT_EQ(std::accumulate(b.history_mask.begin(), b.history_mask.end(), 0), 4);
  EXPECT_EQ(std::accumulate(b.ordered_mask.begin(), b.ordered_mask.end(), 0), cfg.ordered_max_len);
  // Most recent placed item sits in the last slot, one step before the target.
  EXPECT_EQ(b.ordered.back().slot, 1);
  EXPECT_EQ(b.ordered.back().category, 6);
}

TEST(ModelInput, OovCategoryNeverThrows) {
  const FeatureConfig cfg;
  const auto t = make_candidate(1, 100'000);
  WatchHistory h(20);
  WatchedRecord r;
  r.video = {5, -4, 30.0};
  r.impression_pos = 1;
  h.push(r);
  const auto b = build_model_input(cfg, h, {}, t, {NetCondition::kWifi, 2, 10});
  EXPECT_EQ(b.target.category, cfg.oov_category());
  EXPECT_EQ(b.history[0].category, cfg.oov_category());
  EXPECT_EQ(b.history[0].cross_code, kCrossOov);
}

TEST(ModelInput, ProspectivePositionAdvancesWithPrefix) {
  const FeatureConfig cfg;
  const auto a = make_candidate(1, 2), t = make_candidate(3, 2);
  const Candidate* one[] = {&a};
  const ClientContext ctx{NetCondition::kWifi, 10, 0};
  const auto b0 = build_model_input(cfg, WatchHistory(20), {}, t, ctx);
  const auto b1 = build_model_input(cfg, WatchHistory(20), one, t, ctx);
  EXPECT_LT(b0.context.scalars[kCtxPosition], b1.context.scalars[kCtxPosition]);
}

TEST(Schema, DocumentListsSequences) {
  const auto doc = Json::parse(feature_schema_json(FeatureConfig{}));
  EXPECT_EQ(doc.at("schema_version"), kSchemaVersion);
  EXPECT_TRUE(doc.contains("history"));
  EXPECT_TRUE(doc.contains("ordered_candidates"));
}

}  // namespace
}  // namespace edgerank::features
