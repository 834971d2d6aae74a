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

#include "edgerank/experiment.hpp"

namespace edgerank::sim {
namespace {

struct Env {
  SimulatorParams params;
  VideoPool pool;
  ServerStub stub;
  model::ModelParams<float> model;
  SessionEnv env;

  Env()
      : pool(VideoPool::generate(params, 4)),
        stub(pool, params),
        model(model::ModelParams<float>::init(model::ModelConfig::desk(), 4)) {
    env = {&pool, &params, &stub, &model, 21};
  }
};

const Env& shared_env() {
  static const Env e;
  return e;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.n_users = 7;
  c.n_sessions = 70;
  c.bootstrap_samples = 200;
  return c;
}

TEST(ExperimentConfig, JsonRoundTripAndValidation) {
  ExperimentConfig c = small_config();
  c.arms = {Arm::kServerOrder, Arm::kGreedy};
  c.session.like_trigger = true;
  EXPECT_EQ(Json(Json(c).get<ExperimentConfig>()), Json(c));
  c.baseline = Arm::kContextAware;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.confidence = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Experiment, SelfComparisonHasZeroUplift) {
  const auto report = run_experiment(shared_env().env, small_config());
  const Uplift& self = report.uplift(Arm::kServerOrder);
  EXPECT_EQ(self.like, 0.0);
  EXPECT_TRUE(self.like_ci.contains(0.0));
  EXPECT_EQ(self.effective_view, 0.0);
  for (double v : self.like_by_page_position) EXPECT_EQ(v, 0.0);
}

TEST(Experiment, PairedArmsSeeTheSameUsers) {
  const auto results = run_paired_sessions(shared_env().env, small_config());
  ASSERT_EQ(results.size(), 3u);
  for (std::size_t s = 0; s < results[0].size(); ++s) {
    for (const auto& arm : results) {
      EXPECT_EQ(arm[s].session_id, s);
      EXPECT_EQ(arm[s].user_id, s % 7);
      EXPECT_TRUE(arm[s].events.empty());
    }
  }
}

TEST(Experiment, LogReaderReproducesTheReportExactly) {
  const auto config = small_config();
  std::vector<Json> events;
  const auto report = run_experiment(shared_env().env, config, [&](const SessionResult& r) {
    events.insert(events.end(), r.events.begin(), r.events.end());
  });
  const auto reread = summarize(results_from_events(events, config.arms), config,
                                shared_env().params.max_session_depth, shared_env().env.seed);
  ASSERT_EQ(reread.arms.size(), report.arms.size());
  for (std::size_t a = 0; a < report.arms.size(); ++a) {
    EXPECT_EQ(Json(reread.arms[a]), Json(report.arms[a]));
  }
  for (std::size_t u = 0; u < report.uplifts.size(); ++u) {
    EXPECT_EQ(Json(reread.uplifts[u]), Json(report.uplifts[u]));
  }
}

TEST(Experiment, WorkerCountDoesNotChangeAnything) {
  auto config = small_config();
  std::vector<std::string> order_1;
  std::vector<std::string> order_3;
  const auto one = run_experiment(shared_env().env, config, [&](const SessionResult& r) {
    order_1.push_back(std::string(to_string(r.arm)) + ":" + std::to_string(r.session_id));
  });
  config.workers = 3;
  const auto three = run_experiment(shared_env().env, config, [&](const SessionResult& r) {
    order_3.push_back(std::string(to_string(r.arm)) + ":" + std::to_string(r.session_id));
  });
  EXPECT_EQ(order_1, order_3);
  Json a = one;
  Json b = three;
  a["header"].erase("experiment");
  b["header"].erase("experiment");
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_EQ(order_1.front(), "server_order:0");
  EXPECT_EQ(order_1[1], "greedy:0");
}

TEST(Experiment, RatesAndPositionPoolingMatchPerSessionCounts) {
  const auto config = small_config();
  const auto results = run_paired_sessions(shared_env().env, config);
  const int depth = shared_env().params.max_session_depth;
  const auto report = summarize(results, config, depth, 1);
  const int m = config.session.protocol.page_consume_m;
  for (std::size_t a = 0; a < results.size(); ++a) {
    std::int64_t likes = 0;
    std::int64_t imps = 0;
    for (const auto& r : results[a]) {
      likes += r.likes;
      imps += r.impressions;
    }
    EXPECT_EQ(report.arms[a].likes, likes);
    EXPECT_DOUBLE_EQ(report.arms[a].like_rate, static_cast<double>(likes) / imps);
  }
  // Pooled rate at in-page position p over every depth d with d mod m == p.
  const auto pooled = [&](std::size_t arm, int p) {
    double likes = 0.0;
    double shown = 0.0;
    for (const auto& r : results[arm]) {
      for (std::size_t d = p; d < r.like_at.size(); d += m) {
        likes += r.like_at[d];
        shown += 1.0;
      }
    }
    return likes / shown;
  };
  const Uplift& greedy = report.uplift(Arm::kGreedy);
  ASSERT_EQ(static_cast<int>(greedy.like_by_page_position.size()), m);
  for (int p = 0; p < m; ++p) {
    EXPECT_NEAR(greedy.like_by_page_position[p], pooled(1, p) / pooled(0, p) - 1.0, 1e-12);
  }
  EXPECT_LE(greedy.like_ci.low, greedy.like_ci.high);
}

TEST(Experiment, BootstrapIntervalNarrowsWithMoreSessions) {
  auto config = small_config();
  config.arms = {Arm::kServerOrder, Arm::kGreedy};
  const auto narrow_width = [&](int sessions) {
    config.n_sessions = sessions;
    const auto u = run_experiment(shared_env().env, config).uplift(Arm::kGreedy);
    return u.like_ci.high - u.like_ci.low;
  };
  EXPECT_LT(narrow_width(200), narrow_width(30));
}

TEST(StabilityBench, ReportsEveryStep) {
  const auto rows = run_stability_bench(shared_env().env, SessionConfig{}, {5, 4, 4, 1});
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].step, static_cast<int>(i) + 1);
    EXPECT_GT(rows[i].samples, 0);
    EXPECT_GE(rows[i].mean_stability, 0.0);
    EXPECT_LE(rows[i].mean_stability, 1.0);
  }
  EXPECT_DOUBLE_EQ(rows.back().relative_latency, 1.0);
}

}  // namespace
}  // namespace edgerank::sim
