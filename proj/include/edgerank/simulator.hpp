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

#include <array>
#include <cstdint>
#include <span>
#include <unordered_set>
#include <vector>

#include "edgerank/common.hpp"
#include "edgerank/domain.hpp"
#include "edgerank/json_io.hpp"

// Desk-scale stand-ins for the cloud recommender and the person holding the
// phone. The user has a long-term interest per category (visible to the
// server) and a session drift driven by their own feedback (visible only
// through the client's watch history).
namespace edgerank::sim {

struct SimulatorParams {
  int num_categories = 40;
  int num_videos = 5000;
  double min_duration_s = 5.0;
  double max_duration_s = 1800.0;

  // Session drift, logit units.
  double delta_like = 0.8;
  double delta_ev = 0.3;
  double delta_skip = 0.2;
  double gamma = 0.9;
  // A view shorter than skip_fraction * effective-view threshold is a skip.
  double skip_fraction = 0.4;

  // Server score noise, logit units.
  double sigma = 0.35;

  double interest_sd = 0.8;
  double quality_sd = 0.5;
  double base_effective_view = -1.0;
  double base_like = -5.0;
  double base_follow = -4.5;
  double base_share = -5.0;

  // Engagement loses fatigue * depth; exit gains exit_fatigue * depth.
  double fatigue = 0.01;
  double exit_base = -2.0;
  double exit_fatigue = 0.02;
  double exit_like = 1.2;
  double exit_effective_view = 1.5;
  double stall_engagement = 0.5;
  double stall_exit = 2.5;
  // Buffered share below which a poor connection stalls playback.
  double stall_buffer_ratio = 0.5;
  std::array<double, kNumNetConditions> net_engagement = {0.0, 0.0, -0.2, -0.4};
  std::array<double, kNumNetConditions> net_exit = {0.0, 0.1, 0.4, 0.8};
  // Row-stochastic transition matrix of the net-condition chain, per impression.
  std::array<std::array<double, kNumNetConditions>, kNumNetConditions> net_transition = {{
      {0.94, 0.04, 0.015, 0.005},
      {0.05, 0.85, 0.08, 0.02},
      {0.02, 0.18, 0.70, 0.10},
      {0.02, 0.08, 0.30, 0.60},
  }};
  std::array<double, kNumNetConditions> net_initial = {0.55, 0.30, 0.10, 0.05};
  double max_buffer_s = 6.0;

  // Retrieval samples categories with weight exp(a * interest + b * drift),
  // the drift snapshot being taken when the page is requested.
  double retrieval_interest = 1.0;
  double retrieval_drift = 0.5;
  // Candidates retrieved per request; the stub returns the top of them.
  int retrieval_pool = 40;

  int max_session_depth = 150;

  void validate() const;
  bool operator==(const SimulatorParams&) const = default;
};

void to_json(Json& j, const SimulatorParams& p);
void from_json(const Json& j, SimulatorParams& p);

double logistic(double x);

struct VideoQuality {
  double effective_view = 0.0;
  double like = 0.0;
  double follow = 0.0;
};

class VideoPool {
 public:
  static VideoPool generate(const SimulatorParams& params, std::uint64_t seed);

  std::span<const VideoMeta> videos() const { return videos_; }
  const VideoMeta& video(std::size_t index) const { return videos_[index]; }
  const VideoQuality& quality(std::size_t index) const { return quality_[index]; }
  std::span<const std::uint32_t> in_category(int category) const { return by_category_[category]; }
  // Pool index of a video id.
  std::size_t index_of(VideoId id) const;
  int num_categories() const { return static_cast<int>(by_category_.size()); }

 private:
  std::vector<VideoMeta> videos_;
  std::vector<VideoQuality> quality_;
  std::vector<std::vector<std::uint32_t>> by_category_;
};

struct EngagementProbabilities {
  double effective_view = 0.0;
  double like = 0.0;
  double follow = 0.0;
  double share = 0.0;
};

struct Outcome {
  Feedback feedback;
  bool has_next = true;
  bool skip = false;
  bool stalled = false;
};

class SyntheticUser {
 public:
  SyntheticUser(const SimulatorParams& params, std::uint64_t user_id, std::uint64_t seed);

  std::uint64_t id() const { return id_; }
  std::span<const double> interest() const { return interest_; }
  std::span<const double> drift() const { return drift_; }
  void set_drift(int category, double value) { drift_.at(category) = value; }
  void reset_session() { std::fill(drift_.begin(), drift_.end(), 0.0); }

  bool stalls(const VideoMeta& video, double buffered_len_s, NetCondition net) const;
  EngagementProbabilities probabilities(const VideoMeta& video, const VideoQuality& quality,
                                        int depth, NetCondition net, bool stalled) const;
  double exit_probability(const Feedback& feedback, int depth, NetCondition net,
                          bool stalled) const;

  // depth is the 0-based number of videos already consumed this session.
  Outcome sample_feedback(const VideoMeta& video, const VideoQuality& quality, int depth,
                          NetCondition net, double buffered_len_s, Rng& rng) const;
  // Decays every category by gamma, then applies this impression's feedback.
  void update_drift(const VideoMeta& video, const Outcome& outcome);

  // |drift| can never exceed this.
  double drift_bound() const;

 private:
  const SimulatorParams* params_;
  std::uint64_t id_;
  std::vector<double> interest_;
  std::vector<double> drift_;
};

class ServerStub {
 public:
  ServerStub(const VideoPool& pool, const SimulatorParams& params)
      : pool_(&pool), params_(&params) {}

  // Long-term engagement probabilities; no session drift.
  ServerScores ground_truth(const SyntheticUser& user, std::size_t video_index) const;
  // Ground truth perturbed by N(0, sigma) in logit space.
  ServerScores noisy_scores(const SyntheticUser& user, std::size_t video_index, Rng& rng) const;

  // Retrieves max(count, retrieval_pool) unseen candidates and returns the
  // `count` best by alpha * p_ev + beta * p_like of the noisy scores;
  // server_rank is the 0-based position in that order.
  CandidateSet respond(const SyntheticUser& user, std::span<const double> drift_snapshot,
                       const std::unordered_set<VideoId>& exclude, int count, Rng& rng,
                       double alpha = 1.0, double beta = 1.0) const;

 private:
  const VideoPool* pool_;
  const SimulatorParams* params_;
};

// Net condition for every position of a session, exogenous to the arms.
std::vector<NetCondition> sample_net_path(const SimulatorParams& params, int length, Rng& rng);

}  // namespace edgerank::sim
