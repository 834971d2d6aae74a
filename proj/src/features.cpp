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

#include "edgerank/features.hpp"

#include <cstring>
#include <unordered_set>

#include "edgerank/json_io.hpp"

namespace edgerank::features {

namespace {

float time_since_scalar(std::int64_t ms) {
  return static_cast<float>(std::log1p(static_cast<double>(ms)) / 10.0);
}

float position_gap_scalar(int gap) {
  return static_cast<float>(std::min(gap, 100)) / 20.0f;
}

float watch_ratio_scalar(const WatchedRecord& r) {
  const double ratio = r.feedback.watch_time_s / r.video.clamped_duration();
  return static_cast<float>(std::clamp(ratio, 0.0, 3.0));
}

float position_scalar(int pos) { return static_cast<float>(std::min(pos, 200)) / 50.0f; }

template <class V>
void put(std::vector<std::uint8_t>& out, const V& v) {
  static_assert(std::is_trivially_copyable_v<V>);
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(V));
}

}  // namespace

void FeatureConfig::validate() const {
  if (history_max_len < 1 || ordered_max_len < 1) {
    throw ConfigError("sequence lengths must be positive");
  }
  if (category_vocab < 1 || duration_buckets < 1) throw ConfigError("vocab sizes must be positive");
  if (autodis_buckets < 1) throw ConfigError("autodis_buckets must be >= 1");
  if (!(autodis_temperature > 0.0)) throw ConfigError("autodis_temperature must be > 0");
  if (scalar_embed_dim < 1 || category_embed_dim < 1 || feedback_embed_dim < 1) {
    throw ConfigError("embedding sizes must be positive");
  }
}

std::array<double, ServerScores::kNumRates> pxtr_diff(const ServerScores& candidate,
                                                      const ServerScores& history) {
  const auto a = candidate.as_array();
  const auto b = history.as_array();
  std::array<double, ServerScores::kNumRates> out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

RecencyGap recency_and_gap(const ClientContext& target_ctx, const WatchedRecord& history) {
  require(target_ctx.now_ts_ms >= history.impression_ts_ms,
          "recency_and_gap: history impression is in the future");
  require(target_ctx.next_impression_pos > history.impression_pos,
          "recency_and_gap: target position does not follow history position");
  return {target_ctx.now_ts_ms - history.impression_ts_ms,
          target_ctx.next_impression_pos - history.impression_pos};
}

int feedback_code(const Feedback& f) {
  return (f.effective_view ? 1 : 0) | (f.like ? 2 : 0) | (f.follow ? 4 : 0) |
         (f.share ? 8 : 0);
}

int category_index(int category_id, int category_vocab) {
  if (category_id < 0 || category_id >= category_vocab) return category_vocab;
  return category_id;
}

int cross_with_category_feedback(int target_category, int history_category,
                                  const Feedback& history_feedback, int category_vocab) {
  if (category_index(target_category, category_vocab) == category_vocab ||
      category_index(history_category, category_vocab) == category_vocab) {
    return kCrossOov;
  }
  const int match = target_category == history_category ? 1 : 0;
  return match * kNumFeedbackCodes + feedback_code(history_feedback);
}

CrossedHistoryFeature cross_history(const Candidate& target, const ClientContext& target_ctx,
                                    const WatchedRecord& history, int category_vocab) {
  CrossedHistoryFeature out;
  out.pxtr_diff = pxtr_diff(target.server_scores, history.server_scores);
  const auto rg = recency_and_gap(target_ctx, history);
  out.time_since_ms = rg.time_since_ms;
  out.position_gap = rg.position_gap;
  out.category_match = target.video.category_id == history.video.category_id;
  out.feedback_cross = cross_with_category_feedback(
      target.video.category_id, history.video.category_id, history.feedback, category_vocab);
  return out;
}

int duration_bucket(double duration_s, int buckets) {
  const double d = std::clamp(duration_s, 0.0, kMaxDurationS);
  const int b = static_cast<int>(std::log1p(d) / std::log1p(kMaxDurationS) * buckets);
  return std::clamp(b, 0, buckets - 1);
}

float queue_share(std::span<const int> queue_categories, int target_category) {
  if (queue_categories.size() < 2) return 0.0f;
  const auto same = std::count(queue_categories.begin(), queue_categories.end(), target_category);
  require(same >= 1, "queue_share: target category is not in the queue");
  return static_cast<float>(same - 1) / static_cast<float>(queue_categories.size() - 1);
}

FeatureBundle build_model_input(const FeatureConfig& config, const WatchHistory& history,
                                std::span<const Candidate* const> ordered,
                                const Candidate& target, const ClientContext& ctx,
                                std::span<const int> queue_categories) {
  std::unordered_set<VideoId> seen;
  for (const Candidate* c : ordered) {
    require(c != nullptr, "build_model_input: null ordered candidate");
    require(seen.insert(c->video.video_id).second,
            "build_model_input: duplicate ordered candidate");
  }
  require(!seen.contains(target.video.video_id),
          "build_model_input: target is already in the ordered prefix");

  FeatureBundle b;
  const auto vocab = config.category_vocab;
  const auto target_scores = target.server_scores.as_array();

  // The target would be shown after every placed candidate, at the trigger time.
  ClientContext target_ctx = ctx;
  target_ctx.next_impression_pos = ctx.next_impression_pos + static_cast<int>(ordered.size());

  b.target.category = category_index(target.video.category_id, vocab);
  b.target.duration_bucket = duration_bucket(target.video.duration_s, config.duration_buckets);
  for (std::size_t i = 0; i < target_scores.size(); ++i) {
    b.target.pxtr[i] = static_cast<float>(target_scores[i]);
  }

  b.context.net = static_cast<int>(ctx.net_condition);
  b.context.scalars[kCtxPosition] = position_scalar(target_ctx.next_impression_pos);
  b.context.scalars[kCtxBufferRatio] = static_cast<float>(
      std::clamp(target.buffered_len_s / target.video.clamped_duration(), 0.0, 1.0));
  b.context.scalars[kCtxQueueShare] = queue_share(queue_categories, target.video.category_id);

  const auto records = history.records();
  const std::size_t n_hist = std::min<std::size_t>(records.size(), config.history_max_len);
  b.history.assign(config.history_max_len, HistoryToken{});
  b.history_mask.assign(config.history_max_len, 0);
  for (std::size_t i = 0; i < n_hist; ++i) {
    const WatchedRecord& r = records[records.size() - n_hist + i];
    const auto crossed = cross_history(target, target_ctx, r, vocab);
    HistoryToken& t = b.history[i];
    t.category = category_index(r.video.category_id, vocab);
    t.duration_bucket = duration_bucket(r.video.duration_s, config.duration_buckets);
    t.feedback_code = feedback_code(r.feedback);
    t.cross_code = crossed.feedback_cross;
    t.scalars[kHistDiffEffectiveView] = static_cast<float>(crossed.pxtr_diff[0]);
    t.scalars[kHistDiffLike] = static_cast<float>(crossed.pxtr_diff[1]);
    t.scalars[kHistDiffFollow] = static_cast<float>(crossed.pxtr_diff[2]);
    t.scalars[kHistTimeSince] = time_since_scalar(crossed.time_since_ms);
    t.scalars[kHistPositionGap] = position_gap_scalar(crossed.position_gap);
    t.scalars[kHistWatchRatio] = watch_ratio_scalar(r);
    b.history_mask[i] = 1;
  }

  const std::size_t n_ord = std::min<std::size_t>(ordered.size(), config.ordered_max_len);
  b.ordered.assign(config.ordered_max_len, OrderedToken{});
  b.ordered_mask.assign(config.ordered_max_len, 0);
  for (std::size_t i = 0; i < n_ord; ++i) {
    const std::size_t src = ordered.size() - n_ord + i;
    const Candidate& c = *ordered[src];
    const auto scores = c.server_scores.as_array();
    const auto diff = pxtr_diff(target.server_scores, c.server_scores);
    OrderedToken& t = b.ordered[i];
    t.category = category_index(c.video.category_id, vocab);
    t.duration_bucket = duration_bucket(c.video.duration_s, config.duration_buckets);
    t.slot = static_cast<int>(ordered.size() - src);  // 1 = immediately before target
    t.same_category = c.video.category_id == target.video.category_id ? 1 : 0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
      t.scalars[kOrdEffectiveView + k] = static_cast<float>(scores[k]);
      t.scalars[kOrdDiffEffectiveView + k] = static_cast<float>(diff[k]);
    }
    b.ordered_mask[i] = 1;
  }
  return b;
}

std::vector<std::uint8_t> FeatureBundle::to_bytes() const {
  std::vector<std::uint8_t> out;
  put(out, static_cast<std::uint32_t>(schema_version.size()));
  out.insert(out.end(), schema_version.begin(), schema_version.end());
  put(out, static_cast<std::uint32_t>(history.size()));
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& t = history[i];
    put(out, history_mask[i]);
    put(out, t.category);
    put(out, t.duration_bucket);
    put(out, t.feedback_code);
    put(out, t.cross_code);
    put(out, t.scalars);
  }
  put(out, static_cast<std::uint32_t>(ordered.size()));
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto& t = ordered[i];
    put(out, ordered_mask[i]);
    put(out, t.category);
    put(out, t.duration_bucket);
    put(out, t.slot);
    put(out, t.same_category);
    put(out, t.scalars);
  }
  put(out, target.category);
  put(out, target.duration_bucket);
  put(out, target.pxtr);
  put(out, context.net);
  put(out, context.scalars);
  return out;
}

std::string feature_schema_json(const FeatureConfig& c) {
  const auto autodis = [&](const char* name, const char* transform) {
    return Json{{"name", name},
                {"transform", transform},
                {"encoding", "autodis"},
                {"buckets", c.autodis_buckets},
                {"temperature", c.autodis_temperature},
                {"embed_dim", c.scalar_embed_dim}};
  };
  const auto lookup = [&](const char* name, int vocab, int dim) {
    return Json{{"name", name}, {"encoding", "embedding"}, {"vocab", vocab}, {"embed_dim", dim}};
  };
  Json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["history"] = {
      {"max_len", c.history_max_len},
      {"features",
       {lookup("category_id", c.category_vocab + 1, c.category_embed_dim),
        lookup("duration_bucket", c.duration_buckets, c.category_embed_dim),
        lookup("feedback_code", kNumFeedbackCodes, c.feedback_embed_dim),
        lookup("category_feedback_cross", kNumCrossCodes, c.feedback_embed_dim),
        autodis("pxtr_diff_effective_view", "candidate - history"),
        autodis("pxtr_diff_like", "candidate - history"),
        autodis("pxtr_diff_follow", "candidate - history"),
        autodis("time_since_ms", "log1p(ms) / 10"),
        autodis("position_gap", "min(gap, 100) / 20"),
        autodis("watch_ratio", "clamp(watch_time_s / duration_s, 0, 3)")}},
      {"crossed_with_category_feedback",
       {"pxtr_diff_effective_view", "pxtr_diff_like", "pxtr_diff_follow", "time_since_ms",
        "position_gap"}}};
  doc["ordered_candidates"] = {
      {"max_len", c.ordered_max_len},
      {"features",
       {lookup("category_id", c.category_vocab + 1, c.category_embed_dim),
        lookup("duration_bucket", c.duration_buckets, c.category_embed_dim),
        lookup("slots_before_target", c.ordered_max_len + 1, c.feedback_embed_dim),
        lookup("same_category_as_target", 2, c.feedback_embed_dim),
        autodis("p_effective_view", "identity"), autodis("p_like", "identity"),
        autodis("p_follow", "identity"), autodis("pxtr_diff_effective_view", "target - ordered"),
        autodis("pxtr_diff_like", "target - ordered"),
        autodis("pxtr_diff_follow", "target - ordered")}}};
  doc["target"] = {lookup("category_id", c.category_vocab + 1, c.category_embed_dim),
                   lookup("duration_bucket", c.duration_buckets, c.category_embed_dim),
                   autodis("p_effective_view", "identity"), autodis("p_like", "identity"),
                   autodis("p_follow", "identity")};
  doc["context"] = {lookup("net_condition", kNumNetConditions, c.feedback_embed_dim),
                    autodis("impression_position", "min(pos, 200) / 50"),
                    autodis("buffer_ratio", "clamp(buffered_len_s / duration_s, 0, 1)"),
                    autodis("queue_share", "same-category unshown candidates / (unshown - 1)")};
  doc["duration_clamp_s"] = kMaxDurationS;
  return doc.dump(2);
}

}  // namespace edgerank::features
