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

#include "edgerank/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace edgerank::sim {

void SimulatorParams::validate() const {
  if (num_categories < 1 || num_videos < num_categories) {
    throw ConfigError("need at least one video per category");
  }
  if (!(min_duration_s > 0.0 && max_duration_s >= min_duration_s)) {
    throw ConfigError("invalid duration range");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in [0, 1)");
  if (delta_like < 0.0 || delta_ev < 0.0 || delta_skip < 0.0) {
    throw ConfigError("drift increments must be non-negative");
  }
  if (sigma < 0.0 || interest_sd < 0.0 || quality_sd < 0.0) {
    throw ConfigError("standard deviations must be non-negative");
  }
  if (max_session_depth < 1) throw ConfigError("max_session_depth must be >= 1");
  if (retrieval_pool < 1) throw ConfigError("retrieval_pool must be >= 1");
  for (const auto& row : net_transition) {
    const double total = std::accumulate(row.begin(), row.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("net_transition rows must sum to 1");
  }
  if (std::abs(std::accumulate(net_initial.begin(), net_initial.end(), 0.0) - 1.0) > 1e-9) {
    throw ConfigError("net_initial must sum to 1");
  }
}

#define EDGERANK_SIM_FIELDS(X)                                                                   \
  X(num_categories) X(num_videos) X(min_duration_s) X(max_duration_s) X(delta_like) X(delta_ev) \
  X(delta_skip) X(gamma) X(skip_fraction) X(sigma) X(interest_sd) X(quality_sd)                 \
  X(base_effective_view) X(base_like) X(base_follow) X(base_share) X(fatigue) X(exit_base)      \
  X(exit_fatigue) X(exit_like) X(exit_effective_view) X(stall_engagement) X(stall_exit)         \
  X(stall_buffer_ratio) X(net_engagement) X(net_exit) X(net_transition) X(net_initial)          \
  X(max_buffer_s) X(retrieval_interest) X(retrieval_drift) X(retrieval_pool)           \
  X(max_session_depth)

void to_json(Json& j, const SimulatorParams& p) {
  j = Json::object();
#define X(name) j[#name] = p.name;
  EDGERANK_SIM_FIELDS(X)
#undef X
}

void from_json(const Json& j, SimulatorParams& p) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
#define X(name)                \
  if (key == #name) {          \
    value.get_to(p.name);      \
    known = true;              \
  }
    EDGERANK_SIM_FIELDS(X)
#undef X
    if (!known) throw ConfigError("unknown simulator parameter '" + key + "'");
  }
}

#undef EDGERANK_SIM_FIELDS

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

int sample_index(std::span<const double> weights, double u) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u * total < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

}  // namespace

VideoPool VideoPool::generate(const SimulatorParams& params, std::uint64_t seed) {
  params.validate();
  VideoPool pool;
  pool.by_category_.resize(params.num_categories);
  Rng rng(derive_seed(seed, 0x706f6f6c));
  const double lo = std::log(params.min_duration_s);
  const double hi = std::log(params.max_duration_s);
  for (int i = 0; i < params.num_videos; ++i) {
    VideoMeta v;
    v.video_id = static_cast<VideoId>(i + 1);
    // Every category gets at least one video.
    v.category_id = i < params.num_categories ? i : static_cast<int>(rng() % params.num_categories);
    v.duration_s = std::exp(uniform(rng, lo, hi));
    VideoQuality q;
    q.effective_view = params.quality_sd * standard_normal(rng);
    q.like = params.quality_sd * standard_normal(rng);
    q.follow = params.quality_sd * standard_normal(rng);
    pool.by_category_[v.category_id].push_back(static_cast<std::uint32_t>(i));
    pool.videos_.push_back(v);
    pool.quality_.push_back(q);
  }
  return pool;
}

std::size_t VideoPool::index_of(VideoId id) const {
  require(id >= 1 && id <= videos_.size(), "VideoPool: unknown video id");
  return static_cast<std::size_t>(id - 1);
}

SyntheticUser::SyntheticUser(const SimulatorParams& params, std::uint64_t user_id,
                             std::uint64_t seed)
    : params_(&params),
      id_(user_id),
      interest_(params.num_categories),
      drift_(params.num_categories, 0.0) {
  Rng rng(derive_seed(seed, 0x75736572, user_id));
  for (auto& v : interest_) v = params.interest_sd * standard_normal(rng);
}

bool SyntheticUser::stalls(const VideoMeta& video, double buffered_len_s, NetCondition net) const {
  if (net != NetCondition::kCellPoor && net != NetCondition::kOfflineRisk) return false;
  return buffered_len_s / video.clamped_duration() < params_->stall_buffer_ratio;
}

EngagementProbabilities SyntheticUser::probabilities(const VideoMeta& video,
                                                     const VideoQuality& quality, int depth,
                                                     NetCondition net, bool stalled) const {
  const SimulatorParams& p = *params_;
  const int c = video.category_id;
  const double shared = interest_[c] + drift_[c] - p.fatigue * depth +
                        p.net_engagement[static_cast<int>(net)] -
                        (stalled ? p.stall_engagement : 0.0);
  return {logistic(p.base_effective_view + quality.effective_view + shared),
          logistic(p.base_like + quality.like + shared),
          logistic(p.base_follow + quality.follow + shared),
          logistic(p.base_share + shared)};
}

double SyntheticUser::exit_probability(const Feedback& feedback, int depth, NetCondition net,
                                       bool stalled) const {
  const SimulatorParams& p = *params_;
  return logistic(p.exit_base + p.exit_fatigue * depth + p.net_exit[static_cast<int>(net)] +
                  (stalled ? p.stall_exit : 0.0) - (feedback.like ? p.exit_like : 0.0) -
                  (feedback.effective_view ? p.exit_effective_view : 0.0));
}

Outcome SyntheticUser::sample_feedback(const VideoMeta& video, const VideoQuality& quality,
                                       int depth, NetCondition net, double buffered_len_s,
                                       Rng& rng) const {
  // Fixed number of draws per impression so arms sharing a stream stay aligned.
  const double u_ev = uniform01(rng), u_like = uniform01(rng), u_follow = uniform01(rng);
  const double u_share = uniform01(rng), u_watch = uniform01(rng), u_exit = uniform01(rng);

  Outcome out;
  out.stalled = stalls(video, buffered_len_s, net);
  const auto probs = probabilities(video, quality, depth, net, out.stalled);
  Feedback& f = out.feedback;
  f.effective_view = u_ev < probs.effective_view;
  f.like = u_like < probs.like;
  f.follow = u_follow < probs.follow;
  f.share = u_share < probs.share;
  const double threshold = effective_view_threshold_s(video.duration_s);
  if (f.effective_view) {
    const double cap = std::max(threshold, 1.5 * video.clamped_duration());
    f.watch_time_s = std::min(cap, threshold * (1.0 - std::log1p(-u_watch)));
  } else {
    f.watch_time_s = threshold * u_watch;
  }
  out.skip = !f.effective_view && f.watch_time_s < params_->skip_fraction * threshold;
  out.has_next = u_exit >= exit_probability(f, depth, net, out.stalled);
  return out;
}

void SyntheticUser::update_drift(const VideoMeta& video, const Outcome& outcome) {
  const SimulatorParams& p = *params_;
  for (auto& d : drift_) d *= p.gamma;
  double& d = drift_[video.category_id];
  if (outcome.feedback.like) d += p.delta_like;
  if (outcome.feedback.effective_view) d += p.delta_ev;
  if (outcome.skip) d -= p.delta_skip;
}

double SyntheticUser::drift_bound() const {
  const double step = std::max(params_->delta_like + params_->delta_ev, params_->delta_skip);
  return step / (1.0 - params_->gamma);
}

ServerScores ServerStub::ground_truth(const SyntheticUser& user, std::size_t video_index) const {
  const SimulatorParams& p = *params_;
  const VideoMeta& v = pool_->video(video_index);
  const VideoQuality& q = pool_->quality(video_index);
  const double theta = user.interest()[v.category_id];
  return {logistic(p.base_effective_view + q.effective_view + theta),
          logistic(p.base_like + q.like + theta), logistic(p.base_follow + q.follow + theta)};
}

ServerScores ServerStub::noisy_scores(const SyntheticUser& user, std::size_t video_index,
                                      Rng& rng) const {
  const ServerScores truth = ground_truth(user, video_index);
  const double sigma = params_->sigma;
  const auto perturb = [&](double prob) {
    const double z = standard_normal(rng);
    if (sigma == 0.0) return prob;
    return std::clamp(logistic(logit(prob) + sigma * z), 0.0, 1.0);
  };
  const double ev = perturb(truth.p_effective_view);
  const double like = perturb(truth.p_like);
  const double follow = perturb(truth.p_follow);
  return {ev, like, follow};
}

CandidateSet ServerStub::respond(const SyntheticUser& user, std::span<const double> drift_snapshot,
                                 const std::unordered_set<VideoId>& exclude, int count, Rng& rng,
                                 double alpha, double beta) const {
  const SimulatorParams& p = *params_;
  require(static_cast<int>(drift_snapshot.size()) == pool_->num_categories(),
          "ServerStub: drift snapshot size mismatch");
  std::vector<double> weights(pool_->num_categories());
  for (int c = 0; c < pool_->num_categories(); ++c) {
    weights[c] = pool_->in_category(c).empty()
                     ? 0.0
                     : std::exp(p.retrieval_interest * user.interest()[c] +
                                p.retrieval_drift * drift_snapshot[c]);
  }
  std::unordered_set<VideoId> taken;
  CandidateSet page;
  const int retrieved = std::max(count, p.retrieval_pool);
  for (int n = 0; n < retrieved; ++n) {
    std::size_t pick = pool_->videos().size();
    for (int attempt = 0; attempt < 64 && pick == pool_->videos().size(); ++attempt) {
      const auto members = pool_->in_category(sample_index(weights, uniform01(rng)));
      const std::size_t idx = members[rng() % members.size()];
      const VideoId id = pool_->video(idx).video_id;
      if (!exclude.contains(id) && !taken.contains(id)) pick = idx;
    }
    if (pick == pool_->videos().size()) {
      for (std::size_t idx = 0; idx < pool_->videos().size(); ++idx) {
        const VideoId id = pool_->video(idx).video_id;
        if (!exclude.contains(id) && !taken.contains(id)) {
          pick = idx;
          break;
        }
      }
    }
    if (pick == pool_->videos().size()) break;
    taken.insert(pool_->video(pick).video_id);
    Candidate c;
    c.video = pool_->video(pick);
    c.server_scores = noisy_scores(user, pick, rng);
    c.buffered_len_s = std::min(c.video.duration_s, uniform(rng, 0.0, p.max_buffer_s));
    page.push_back(c);
  }
  std::stable_sort(page.begin(), page.end(), [&](const Candidate& a, const Candidate& b) {
    const double sa = alpha * a.server_scores.p_effective_view + beta * a.server_scores.p_like;
    const double sb = alpha * b.server_scores.p_effective_view + beta * b.server_scores.p_like;
    if (sa != sb) return sa > sb;
    return a.video.video_id < b.video.video_id;
  });
  if (static_cast<int>(page.size()) > count) page.resize(count);
  for (std::size_t i = 0; i < page.size(); ++i) page[i].server_rank = static_cast<int>(i);
  return page;
}

std::vector<NetCondition> sample_net_path(const SimulatorParams& params, int length, Rng& rng) {
  std::vector<NetCondition> path;
  path.reserve(length);
  int state = sample_index(params.net_initial, uniform01(rng));
  for (int i = 0; i < length; ++i) {
    path.push_back(static_cast<NetCondition>(state));
    state = sample_index(params.net_transition[state], uniform01(rng));
  }
  return path;
}

}  // namespace edgerank::sim
