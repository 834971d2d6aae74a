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
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgerank/common.hpp"

namespace edgerank {

using VideoId = std::uint64_t;

inline constexpr double kMaxDurationS = 1800.0;

struct VideoMeta {
  VideoId video_id = 0;
  int category_id = 0;
  double duration_s = 1.0;

  // Duration used by every encoder: clamped to kMaxDurationS.
  double clamped_duration() const;
  bool operator==(const VideoMeta&) const = default;
};

// Rates predicted by the server-side ranker for one (user, video) pair.
struct ServerScores {
  static constexpr std::size_t kNumRates = 3;

  double p_effective_view = 0.0;
  double p_like = 0.0;
  double p_follow = 0.0;

  std::array<double, kNumRates> as_array() const {
    return {p_effective_view, p_like, p_follow};
  }
  bool valid() const;
  bool operator==(const ServerScores&) const = default;
};

struct Feedback {
  bool effective_view = false;
  bool like = false;
  bool follow = false;
  bool share = false;
  double watch_time_s = 0.0;

  bool operator==(const Feedback&) const = default;
};

struct WatchedRecord {
  VideoMeta video;
  ServerScores server_scores;
  Feedback feedback;
  std::int64_t impression_ts_ms = 0;
  int impression_pos = 1;

  bool operator==(const WatchedRecord&) const = default;
};

// The client-side real-time watched list: newest last, bounded, FIFO eviction.
class WatchHistory {
 public:
  static constexpr std::size_t kDefaultMaxLen = 20;

  explicit WatchHistory(std::size_t max_len = kDefaultMaxLen);

  // Throws ContractViolation unless record.impression_pos is strictly greater
  // than the last stored position.
  void push(WatchedRecord record);

  std::span<const WatchedRecord> records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::size_t max_len() const { return max_len_; }
  const WatchedRecord& back() const { return records_.back(); }

  bool operator==(const WatchHistory&) const = default;

 private:
  std::vector<WatchedRecord> records_;
  std::size_t max_len_;
};

WatchHistory push_watched(WatchHistory history, WatchedRecord record);

enum class NetCondition : int { kWifi = 0, kCellGood = 1, kCellPoor = 2, kOfflineRisk = 3 };
inline constexpr int kNumNetConditions = 4;

std::string_view to_string(NetCondition net);
NetCondition parse_net_condition(std::string_view text);

struct ClientContext {
  NetCondition net_condition = NetCondition::kWifi;
  int next_impression_pos = 1;
  std::int64_t now_ts_ms = 0;

  bool operator==(const ClientContext&) const = default;
};

struct Candidate {
  VideoMeta video;
  ServerScores server_scores;
  double buffered_len_s = 0.0;
  int server_rank = 0;

  bool operator==(const Candidate&) const = default;
};

using CandidateSet = std::vector<Candidate>;

// Model output for one video in its ranking context.
struct PredictionTriple {
  double p_has_next = 0.5;
  double p_effective_view = 0.5;
  double p_like = 0.5;

  bool operator==(const PredictionTriple&) const = default;
};

enum class BeamSelection {
  // Slot j of the beam holds the best unused extension of slots 1..j, so the
  // first j slots always equal the width-j beam. Best LR is monotone in k.
  kNested,
  // Plain TopK over all extensions.
  kTopK,
};

struct RerankConfig {
  int beam_size_k = 4;
  int n_show = 1;
  // std::nullopt disables early stopping.
  std::optional<double> stability_threshold_t = 0.95;
  double alpha = 1.0;
  double beta = 1.0;
  int max_steps = 5;
  BeamSelection selection = BeamSelection::kNested;

  void validate() const;
};

struct ProtocolConfig {
  int page_consume_m = 6;
  int page_return_total = 9;

  int extra_n() const { return page_return_total - page_consume_m; }
  void validate() const;
};

// Duration-bucketed effective-view thresholds: <15 s -> 5 s, 15..600 s -> 10 s,
// >600 s -> 20 s.
double effective_view_threshold_s(double duration_s);
bool effective_view_label(double watch_time_s, double duration_s);

}  // namespace edgerank
