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
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "edgerank/model.hpp"
#include "edgerank/session.hpp"
#include "edgerank/weights_io.hpp"

// Offline training on logged sessions and the evaluation harness.
namespace edgerank::training {

// One training instance: the impression at `position` (0-based within its
// session). The `prefix_len` impressions right before it play the role of
// the already-ordered list; everything earlier is watch history.
struct SampleRef {
  std::uint32_t session = 0;
  std::uint32_t position = 0;
  std::uint8_t prefix_len = 0;
};

class ImpressionDataset {
 public:
  ImpressionDataset() = default;
  // Groups impressions by (arm, session) in first-seen order and sorts each session
  // by impression_pos.
  static ImpressionDataset from_impressions(std::vector<sim::LoggedImpression> impressions);
  static ImpressionDataset from_events(const std::vector<Json>& events);
  // Streams an NDJSON event log.
  static ImpressionDataset from_ndjson(std::istream& in);

  std::size_t sessions() const { return sessions_.size(); }
  std::size_t impressions() const { return total_; }
  const std::vector<sim::LoggedImpression>& session(std::size_t i) const { return sessions_[i]; }

  // Every impression exactly once, prefix length 0.
  std::vector<SampleRef> evaluation_samples() const;
  // Every impression exactly once, with prefix length drawn uniformly from
  // [0, min(max_prefix, earlier impressions)] using `seed`; with
  // `within_page` only earlier impressions of the same page count.
  std::vector<SampleRef> training_samples(int max_prefix, std::uint64_t seed,
                                          bool within_page = true) const;

  // With `prefix_in_history` the prefix items also stay in the watch history
  // and the context is the target's own.
  model::Example build(const SampleRef& ref, const features::FeatureConfig& config,
                       bool prefix_in_history = false) const;

  // Splits by session: every `holdout_every`-th session (by hashed id) goes
  // to the second dataset.
  std::pair<ImpressionDataset, ImpressionDataset> split(int holdout_every,
                                                        std::uint64_t seed) const;

 private:
  std::vector<std::vector<sim::LoggedImpression>> sessions_;
  std::size_t total_ = 0;
};

Candidate candidate_from_log(const sim::LoggedImpression& impression);

struct TrainConfig {
  model::ModelConfig model = model::ModelConfig::desk();
  std::int64_t steps = 3000;
  int batch_size = 128;
  double learning_rate = 2e-3;
  std::int64_t checkpoint_every = 500;
  int max_prefix = 4;
  // Training prefixes are the videos watched just before the target. By
  // default they are held out of the watch history, stay on the target's
  // page and the context is taken at the first of them, as at serving time.
  // `prefix_in_history` keeps them in the history with their feedback; the
  // model then sees history gaps at training time that never occur when
  // re-ranking.
  bool prefix_in_history = false;
  bool prefix_within_page = true;
  int workers = 1;
  std::uint64_t seed = 1;

  void validate() const;
};

void to_json(Json& j, const TrainConfig& c);
void from_json(const Json& j, TrainConfig& c);

struct LossPoint {
  std::int64_t step = 0;
  double loss = 0.0;
  double smoothed = 0.0;
};

class Trainer {
 public:
  Trainer(const TrainConfig& config, const ImpressionDataset& data);
  // Restores params, optimizer moments and step count from a checkpoint
  // written by checkpoint(); the dataset and config must be the same.
  static Trainer resume(const TrainConfig& config, const ImpressionDataset& data,
                        const std::string& checkpoint_path);

  // Runs one optimizer step and returns its batch loss.
  double step();
  // Steps until `config.steps`, calling `on_checkpoint(step)` every
  // checkpoint_every steps and at the end.
  void run(const std::function<void(std::int64_t)>& on_checkpoint = {});

  std::int64_t steps_done() const { return adam_.step; }
  const model::ModelParams<float>& params() const { return params_; }
  const std::vector<LossPoint>& curve() const { return curve_; }
  const TrainConfig& config() const { return config_; }

  // Params plus optimizer state; returns the file digest.
  std::string save_checkpoint(const std::string& path) const;

 private:
  std::vector<model::Example> batch_for(std::int64_t step) const;

  TrainConfig config_;
  const ImpressionDataset* data_;
  model::ModelParams<float> params_;
  model::AdamState<float> adam_;
  std::vector<LossPoint> curve_;
  mutable std::int64_t cached_epoch_ = -1;
  mutable std::vector<SampleRef> cached_samples_;
};

// Area under the ROC curve with average ranks for ties. NaN when a class is
// empty.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

inline constexpr double kNoScore = std::numeric_limits<double>::quiet_NaN();

struct TaskAuc {
  double has_next = kNoScore;
  double effective_view = kNoScore;
  double like = kNoScore;
};

struct EvalReport {
  std::size_t impressions = 0;
  TaskAuc model;
  // Server scores as rankers (no has_next score exists on the server).
  TaskAuc server;
  double log_loss = 0.0;
};

void to_json(Json& j, const TaskAuc& a);
void to_json(Json& j, const EvalReport& r);

EvalReport evaluate(const model::ModelParams<float>& params, const ImpressionDataset& data,
                    int workers = 1);

}  // namespace edgerank::training
