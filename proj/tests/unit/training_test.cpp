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

#include <cmath>
#include <filesystem>
#include <set>

#include "edgerank/training.hpp"
#include "edgerank/weights_io.hpp"

namespace edgerank::training {
namespace {

// Pairwise definition: P(score of a positive > score of a negative), ties 1/2.
double pairwise_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      pairs += 1.0;
    }
  }
  return wins / pairs;
}

struct Logs {
  sim::SimulatorParams params;
  sim::VideoPool pool;
  sim::ServerStub stub;
  std::vector<Json> events;

  explicit Logs(int sessions)
      : pool(sim::VideoPool::generate(params, 3)), stub(pool, params) {
    const sim::SessionEnv env{&pool, &params, &stub, nullptr, 3};
    for (int s = 0; s < sessions; ++s) {
      const sim::SyntheticUser user(params, s % 7, derive_seed(5, s % 7));
      auto r = sim::run_session(sim::Arm::kServerOrder, user, env, sim::SessionConfig{},
                                static_cast<std::uint64_t>(s));
      events.insert(events.end(), r.events.begin(), r.events.end());
    }
  }
};

const Logs& logs() {
  static const Logs l(24);
  return l;
}

TEST(Auc, MatchesPairwiseDefinitionWithTies) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 5 + static_cast<int>(rng() % 60);
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 7);  // many ties
      y[i] = bernoulli(rng, 0.4);
    }
    y[0] = 1;
    y[1] = 0;
    EXPECT_NEAR(auc(s, y), pairwise_auc(s, y), 1e-12);
  }
}

TEST(Auc, EdgeCases) {
  const std::vector<std::uint8_t> y = {0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.1, 0.2, 0.3, 0.4}, y), 1.0);
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.4, 0.3, 0.2, 0.1}, y), 0.0);
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y), 0.5);
  EXPECT_TRUE(std::isnan(auc(std::vector<double>{0.1, 0.2}, std::vector<std::uint8_t>{1, 1})));
}

TEST(ImpressionDataset, GroupsSessionsInImpressionOrder) {
  const auto data = ImpressionDataset::from_events(logs().events);
  EXPECT_EQ(data.sessions(), 24u);
  std::size_t total = 0;
  for (std::size_t s = 0; s < data.sessions(); ++s) {
    const auto& imps = data.session(s);
    for (std::size_t i = 0; i < imps.size(); ++i) {
      EXPECT_EQ(imps[i].record.impression_pos, static_cast<int>(i) + 1);
      EXPECT_FALSE(imps[i].queue_categories.empty());
    }
    total += imps.size();
  }
  EXPECT_EQ(total, data.impressions());
}

TEST(ImpressionDataset, SameSessionIdInTwoArmsStaysSeparate) {
  auto imps = sim::read_impressions(logs().events);
  const std::size_t n = imps.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto copy = imps[i];
    copy.arm = "greedy";
    imps.push_back(std::move(copy));
  }
  const auto data = ImpressionDataset::from_impressions(std::move(imps));
  EXPECT_EQ(data.sessions(), 48u);
  EXPECT_EQ(data.impressions(), 2 * n);
}

TEST(ImpressionDataset, TrainingPrefixesStayWithinTheirPage) {
  const auto data = ImpressionDataset::from_events(logs().events);
  const auto samples = data.training_samples(4, 9);
  ASSERT_EQ(samples.size(), data.impressions());
  std::set<int> lengths;
  for (const auto& ref : samples) {
    const auto& s = data.session(ref.session);
    EXPECT_LE(ref.prefix_len, 4);
    for (int k = 1; k <= ref.prefix_len; ++k) {
      EXPECT_EQ(s[ref.position - k].page, s[ref.position].page);
    }
    lengths.insert(ref.prefix_len);
  }
  EXPECT_EQ(lengths, (std::set<int>{0, 1, 2, 3, 4}));
  const auto again = data.training_samples(4, 9);
  for (std::size_t i = 0; i < samples.size(); ++i) EXPECT_EQ(samples[i].prefix_len, again[i].prefix_len);
  for (const auto& ref : data.evaluation_samples()) EXPECT_EQ(ref.prefix_len, 0);
}

TEST(ImpressionDataset, BuildSplitsHistoryAndPrefix) {
  const auto data = ImpressionDataset::from_events(logs().events);
  const auto fc = model::ModelConfig::desk().features;
  std::size_t s = 0;
  while (data.session(s).size() < 8) ++s;
  const SampleRef ref{static_cast<std::uint32_t>(s), 7, 1};
  const auto ex = data.build(ref, fc);
  const auto& target = data.session(s)[7];
  EXPECT_EQ(ex.labels.like, target.record.feedback.like);
  EXPECT_EQ(ex.labels.has_next, target.has_next);
  EXPECT_EQ(std::count(ex.bundle.history_mask.begin(), ex.bundle.history_mask.end(), 1), 6);
  EXPECT_EQ(std::count(ex.bundle.ordered_mask.begin(), ex.bundle.ordered_mask.end(), 1), 1);
  EXPECT_THROW(data.build({static_cast<std::uint32_t>(s), 2, 3}, fc), ContractViolation);
}

TEST(ImpressionDataset, PrefixMayCrossPagesAndStayInHistory) {
  const auto data = ImpressionDataset::from_events(logs().events);
  const auto samples = data.training_samples(4, 9, false);
  bool crossed = false;
  for (const auto& ref : samples) {
    EXPECT_LE(ref.prefix_len, std::min<std::uint32_t>(4, ref.position));
    const auto& s = data.session(ref.session);
    if (ref.prefix_len > 0 && s[ref.position - ref.prefix_len].page != s[ref.position].page) {
      crossed = true;
    }
  }
  EXPECT_TRUE(crossed);

  const auto fc = model::ModelConfig::desk().features;
  std::size_t s = 0;
  while (data.session(s).size() < 8) ++s;
  const auto ex = data.build({static_cast<std::uint32_t>(s), 7, 3}, fc, true);
  EXPECT_EQ(std::count(ex.bundle.history_mask.begin(), ex.bundle.history_mask.end(), 1), 7);
  EXPECT_EQ(std::count(ex.bundle.ordered_mask.begin(), ex.bundle.ordered_mask.end(), 1), 3);
  // Same history and context as the prefix-free example for that target.
  const auto plain = data.build({static_cast<std::uint32_t>(s), 7, 0}, fc, true);
  EXPECT_TRUE(ex.bundle.history == plain.bundle.history);
  EXPECT_TRUE(ex.bundle.context == plain.bundle.context);
}

TEST(ImpressionDataset, SplitPartitionsSessions) {
  const auto data = ImpressionDataset::from_events(logs().events);
  const auto [train, held] = data.split(4, 1);
  EXPECT_EQ(train.sessions() + held.sessions(), data.sessions());
  EXPECT_EQ(train.impressions() + held.impressions(), data.impressions());
  EXPECT_GT(held.sessions(), 0u);
  std::set<std::uint64_t> ids;
  for (std::size_t i = 0; i < train.sessions(); ++i) ids.insert(train.session(i).front().session_id);
  for (std::size_t i = 0; i < held.sessions(); ++i) {
    EXPECT_FALSE(ids.contains(held.session(i).front().session_id));
  }
}

TEST(TrainConfig, JsonRoundTripAndValidation) {
  TrainConfig c;
  c.steps = 77;
  c.max_prefix = 2;
  c.seed = 9;
  const TrainConfig back = Json(c).get<TrainConfig>();
  EXPECT_EQ(Json(back), Json(c));
  c.max_prefix = 99;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.prefix_in_history = false;
  c.prefix_within_page = false;
  EXPECT_THROW(c.validate(), ConfigError);
  c.prefix_within_page = true;
  EXPECT_NO_THROW(c.validate());
}

TrainConfig small_config() {
  TrainConfig c;
  c.steps = 6;
  c.batch_size = 16;
  c.checkpoint_every = 3;
  return c;
}

TEST(Trainer, DeterministicForAFixedSeed) {
  const auto data = ImpressionDataset::from_events(logs().events);
  Trainer a(small_config(), data);
  Trainer b(small_config(), data);
  a.run();
  b.run();
  EXPECT_EQ(a.params().data, b.params().data);
  ASSERT_EQ(a.curve().size(), 6u);
  EXPECT_EQ(a.curve().back().loss, b.curve().back().loss);
}

TEST(Trainer, ResumeContinuesBitForBit) {
  const auto data = ImpressionDataset::from_events(logs().events);
  const auto path = (std::filesystem::temp_directory_path() / "edgerank_resume_test.ewt").string();
  Trainer straight(small_config(), data);
  straight.run();

  auto half = small_config();
  half.steps = 3;
  Trainer first(half, data);
  first.run();
  first.save_checkpoint(path);
  Trainer resumed = Trainer::resume(small_config(), data, path);
  EXPECT_EQ(resumed.steps_done(), 3);
  resumed.run();
  EXPECT_EQ(resumed.params().data, straight.params().data);
  std::filesystem::remove(path);
}

TEST(Trainer, ResumeRejectsAPlainWeightsFile) {
  const auto data = ImpressionDataset::from_events(logs().events);
  const auto path = (std::filesystem::temp_directory_path() / "edgerank_plain_test.ewt").string();
  Trainer t(small_config(), data);
  model::save(t.params(), path);
  EXPECT_THROW(Trainer::resume(small_config(), data, path), ConfigError);
  std::filesystem::remove(path);
}

TEST(Trainer, LossDecreases) {
  const auto data = ImpressionDataset::from_events(logs().events);
  auto c = small_config();
  c.steps = 150;
  c.learning_rate = 5e-3;
  Trainer t(c, data);
  t.run();
  double early = 0.0;
  double late = 0.0;
  for (int i = 0; i < 20; ++i) {
    early += t.curve()[i].loss;
    late += t.curve()[t.curve().size() - 1 - i].loss;
  }
  EXPECT_LT(late, early);
}

TEST(Evaluate, ServerAucIsScoreRanking) {
  const auto data = ImpressionDataset::from_events(logs().events);
  const auto params = model::ModelParams<float>::init(model::ModelConfig::desk(), 2);
  const auto report = evaluate(params, data);
  EXPECT_EQ(report.impressions, data.impressions());
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  for (std::size_t s = 0; s < data.sessions(); ++s) {
    for (const auto& imp : data.session(s)) {
      scores.push_back(imp.record.server_scores.p_like);
      labels.push_back(imp.record.feedback.like);
    }
  }
  EXPECT_DOUBLE_EQ(report.server.like, pairwise_auc(scores, labels));
  EXPECT_TRUE(std::isnan(report.server.has_next));
  EXPECT_TRUE(Json(report)["server_auc"]["has_next"].is_null());
  EXPECT_EQ(evaluate(params, data, 3).model.like, report.model.like);
}

}  // namespace
}  // namespace edgerank::training
