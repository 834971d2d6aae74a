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
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "edgerank/domain.hpp"
#include "edgerank/json_io.hpp"
#include "edgerank/model.hpp"
#include "edgerank/rerank.hpp"
#include "edgerank/simulator.hpp"

// The client loop: pagination, re-rank triggers, the watched list, and the
// event log every run leaves behind.
namespace edgerank::sim {

enum class Arm { kServerOrder, kGreedy, kContextAware };
std::string_view to_string(Arm arm);
Arm parse_arm(std::string_view text);

struct SessionConfig {
  RerankConfig rerank;
  ProtocolConfig protocol;
  // Re-rank also right after a like, not only on swipe.
  bool like_trigger = false;
  std::int64_t start_ts_ms = 1'700'000'000'000;
  double swipe_gap_s = 1.0;
  std::size_t history_max_len = 20;

  void validate() const;
};

void to_json(Json& j, const SessionConfig& c);
void from_json(const Json& j, SessionConfig& c);

struct SessionEnv {
  const VideoPool* pool = nullptr;
  const SimulatorParams* params = nullptr;
  const ServerStub* stub = nullptr;
  // Required by the greedy and context-aware arms.
  const model::ModelParams<float>* model = nullptr;
  std::uint64_t seed = 0;
};

struct NextDecision {
  Candidate candidate;
  bool page_fetched = false;
  std::vector<VideoId> discarded;
  std::vector<VideoId> queue_before;
  std::vector<VideoId> queue_after;
  std::optional<rerank::RerankResult> rerank;
};

// One session's client state machine. Events are appended to `events()`.
class ClientSession {
 public:
  ClientSession(Arm arm, SyntheticUser& user, const SessionEnv& env, const SessionConfig& config,
                std::uint64_t session_id);

  // Fetches a page when due, re-ranks the queue and returns the video to show.
  const NextDecision& next();
  // Records the outcome for the video returned by the last next().
  void record(const Outcome& outcome);
  // Re-ranks the queue without showing anything (like trigger).
  void rerank_queue();
  void finish(std::string_view reason);

  bool awaiting_feedback() const { return awaiting_; }
  bool finished() const { return finished_; }
  int consumed() const { return consumed_; }
  int page() const { return page_; }
  NetCondition current_net() const;
  const Candidate& current() const { return decision_.candidate; }
  const CandidateSet& queue() const { return queue_; }
  const WatchHistory& history() const { return history_; }
  ClientContext context() const;
  std::uint64_t session_id() const { return session_id_; }
  Arm arm() const { return arm_; }
  const std::vector<Json>& events() const { return events_; }
  std::vector<Json> take_events() { return std::move(events_); }
  // Predictions for every queued candidate with an empty prefix.
  std::vector<PredictionTriple> queue_predictions() const;

 private:
  void fetch_page();
  void reorder_queue(NextDecision& decision);
  Json base_event(const char* kind) const;

  Arm arm_;
  SyntheticUser* user_;
  SessionEnv env_;
  SessionConfig config_;
  std::uint64_t session_id_;
  std::uint64_t seed_;
  std::vector<NetCondition> net_path_;
  WatchHistory history_;
  CandidateSet queue_;
  CandidateSet page_candidates_;
  // Drift the server sees: the snapshot taken at the previous page request.
  std::vector<double> server_drift_;
  std::unordered_set<VideoId> shown_;
  std::int64_t now_ms_;
  int consumed_ = 0;
  int page_ = -1;
  bool awaiting_ = false;
  bool finished_ = false;
  NextDecision decision_;
  std::vector<Json> events_;
};

struct SessionResult {
  std::uint64_t session_id = 0;
  std::uint64_t user_id = 0;
  Arm arm = Arm::kServerOrder;
  int impressions = 0;
  int effective_views = 0;
  int likes = 0;
  int follows = 0;
  // Per consumed position (0-based).
  std::vector<std::uint8_t> like_at;
  std::vector<std::uint8_t> effective_view_at;
  std::vector<Json> events;
};

// Runs one session with the synthetic user. Fully determined by
// (env.seed, session_id, arm, configs).
SessionResult run_session(Arm arm, SyntheticUser user, const SessionEnv& env,
                          const SessionConfig& config, std::uint64_t session_id);

// Rng stream for the feedback at 1-based `position` of a session.
Rng feedback_stream(std::uint64_t env_seed, std::uint64_t session_id, int position);

// ---- log reading and protocol checks ---------------------------------------

struct LoggedImpression {
  std::uint64_t session_id = 0;
  std::uint64_t user_id = 0;
  std::string arm;
  int page = 0;
  int server_rank = 0;
  NetCondition net_condition = NetCondition::kWifi;
  double buffered_len_s = 0.0;
  bool has_next = false;
  WatchedRecord record;
  // Categories of the page's unshown candidates when this one was shown,
  // itself included. Empty when the log has no page_fetch events.
  std::vector<int> queue_categories;
};

std::vector<LoggedImpression> read_impressions(const std::vector<Json>& events);

struct ProtocolReport {
  std::vector<std::string> violations;
  int sessions = 0;
  int impressions = 0;
  int page_fetches = 0;
  int discarded = 0;
  std::vector<int> fetch_consumed_counts;
  bool ok() const { return violations.empty(); }
};

// Reads an NDJSON event log and calls `fn` with each session's events once
// its session_end arrives; sessions still open at EOF are flushed last, in
// first-seen order. Throws ConfigError on malformed lines.
void for_each_session_log(std::istream& in, const std::function<void(std::vector<Json>)>& fn);

// Replays session logs and checks the pagination state machine.
ProtocolReport validate_protocol(const std::vector<Json>& events, const ProtocolConfig& protocol);

}  // namespace edgerank::sim
