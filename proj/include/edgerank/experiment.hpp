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
#include <vector>

#include "edgerank/session.hpp"

// Paired A/B runs over synthetic users and the metrics read back from logs.
namespace edgerank::sim {

struct ExperimentConfig {
  std::vector<Arm> arms = {Arm::kServerOrder, Arm::kGreedy, Arm::kContextAware};
  Arm baseline = Arm::kServerOrder;
  int n_users = 500;
  int n_sessions = 1000;
  int workers = 1;
  int bootstrap_samples = 1000;
  double confidence = 0.95;
  SessionConfig session;

  void validate() const;
};

void to_json(Json& j, const ExperimentConfig& c);
void from_json(const Json& j, ExperimentConfig& c);

// Session s is always played by user (s mod n_users) with session id s, in
// every arm.
SyntheticUser experiment_user(const SimulatorParams& params, std::uint64_t env_seed,
                              std::uint64_t user_id);

struct ArmMetrics {
  Arm arm = Arm::kServerOrder;
  int sessions = 0;
  std::int64_t impressions = 0;
  std::int64_t effective_views = 0;
  std::int64_t likes = 0;
  std::int64_t follows = 0;
  double effective_view_rate = 0.0;
  double like_rate = 0.0;
  double follow_rate = 0.0;
  double mean_depth = 0.0;
  // Indexed by 0-based depth; length = max session depth.
  std::vector<std::int64_t> reached_at_depth;
  std::vector<std::int64_t> likes_at_depth;
};

struct Interval {
  double low = 0.0;
  double high = 0.0;
  bool contains(double x) const { return low <= x && x <= high; }
};

struct Uplift {
  Arm arm = Arm::kServerOrder;
  Arm baseline = Arm::kServerOrder;
  // Relative: arm rate / baseline rate - 1.
  double like = 0.0;
  Interval like_ci;
  double effective_view = 0.0;
  Interval effective_view_ci;
  double depth = 0.0;
  // Like-rate uplift at each depth (NaN where either arm has no data).
  std::vector<double> like_by_depth;
  // Pooled like-rate uplift at each in-page position (0 = page start).
  std::vector<double> like_by_page_position;
};

struct ExperimentReport {
  Json header;
  std::vector<ArmMetrics> arms;
  std::vector<Uplift> uplifts;

  const ArmMetrics& metrics(Arm arm) const;
  const Uplift& uplift(Arm arm) const;
};

void to_json(Json& j, const ArmMetrics& m);
void to_json(Json& j, const Uplift& u);
void to_json(Json& j, const ExperimentReport& r);

// Per arm, one result per session in session order. Paired: index s of every
// arm is the same user and session id.
using PairedResults = std::vector<std::vector<SessionResult>>;

// `on_session` sees every result with its events, in an order independent of
// the worker count (chunks of sessions, arms in config order within a
// session). Events are dropped from the returned results.
PairedResults run_paired_sessions(
    const SessionEnv& env, const ExperimentConfig& config,
    const std::function<void(const SessionResult&)>& on_session = {});

ExperimentReport summarize(const PairedResults& results, const ExperimentConfig& config,
                           int max_depth, std::uint64_t seed);

ExperimentReport run_experiment(const SessionEnv& env, const ExperimentConfig& config,
                                const std::function<void(const SessionResult&)>& on_session = {});

// Rebuilds per-session results from event logs (the independent log reader).
// Sessions are grouped by arm and ordered by session id.
PairedResults results_from_events(const std::vector<Json>& events, const std::vector<Arm>& arms);

// ---- stability bench -----------------------------------------------------------

struct StabilityRow {
  int step = 0;
  double mean_stability = 0.0;
  std::int64_t samples = 0;
  double mean_latency_ms = 0.0;
  // Latency relative to the deepest step.
  double relative_latency = 0.0;
};

struct StabilityBenchConfig {
  int sessions = 100;
  int max_steps = 5;
  int beam_size_k = 4;
  int repeats = 1;
};

// Drives context-aware sessions with early stopping disabled and records,
// per search step, the mean beam stability and the time a search stopping
// at that step takes on the same trigger.
std::vector<StabilityRow> run_stability_bench(const SessionEnv& env, const SessionConfig& session,
                                              const StabilityBenchConfig& bench);

void to_json(Json& j, const StabilityRow& r);

}  // namespace edgerank::sim
