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

#include "edgerank/session.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <set>

namespace edgerank::sim {

std::string_view to_string(Arm arm) {
  switch (arm) {
    case Arm::kServerOrder: return "server_order";
    case Arm::kGreedy: return "greedy";
    case Arm::kContextAware: return "context_aware";
  }
  return "server_order";
}

Arm parse_arm(std::string_view text) {
  if (text == "server_order") return Arm::kServerOrder;
  if (text == "greedy") return Arm::kGreedy;
  if (text == "context_aware") return Arm::kContextAware;
  throw ConfigError("unknown arm '" + std::string(text) + "'");
}

void SessionConfig::validate() const {
  rerank.validate();
  protocol.validate();
  if (history_max_len < 1) throw ConfigError("history_max_len must be >= 1");
  if (swipe_gap_s < 0.0) throw ConfigError("swipe_gap_s must be >= 0");
  if (rerank.n_show > protocol.page_return_total - protocol.page_consume_m + 1) {
    throw ConfigError("n_show exceeds the smallest queue the protocol can leave");
  }
}

void to_json(Json& j, const SessionConfig& c) {
  j = Json{{"rerank", c.rerank},
           {"protocol", c.protocol},
           {"like_trigger", c.like_trigger},
           {"start_ts_ms", c.start_ts_ms},
           {"swipe_gap_s", c.swipe_gap_s},
           {"history_max_len", c.history_max_len}};
}

void from_json(const Json& j, SessionConfig& c) {
  if (j.contains("rerank")) j.at("rerank").get_to(c.rerank);
  if (j.contains("protocol")) j.at("protocol").get_to(c.protocol);
  if (j.contains("like_trigger")) j.at("like_trigger").get_to(c.like_trigger);
  if (j.contains("start_ts_ms")) j.at("start_ts_ms").get_to(c.start_ts_ms);
  if (j.contains("swipe_gap_s")) j.at("swipe_gap_s").get_to(c.swipe_gap_s);
  if (j.contains("history_max_len")) j.at("history_max_len").get_to(c.history_max_len);
}

Rng feedback_stream(std::uint64_t env_seed, std::uint64_t session_id, int position) {
  return Rng(derive_seed(derive_seed(env_seed, session_id), 3, static_cast<std::uint64_t>(position)));
}

namespace {

std::vector<VideoId> ids_of(const CandidateSet& cands) {
  std::vector<VideoId> out;
  out.reserve(cands.size());
  for (const auto& c : cands) out.push_back(c.video.video_id);
  return out;
}

}  // namespace

ClientSession::ClientSession(Arm arm, SyntheticUser& user, const SessionEnv& env,
                             const SessionConfig& config, std::uint64_t session_id)
    : arm_(arm),
      user_(&user),
      env_(env),
      config_(config),
      session_id_(session_id),
      seed_(derive_seed(env.seed, session_id)),
      history_(config.history_max_len),
      server_drift_(user.drift().size(), 0.0),
      now_ms_(config.start_ts_ms) {
  config_.validate();
  require(env.pool && env.params && env.stub, "ClientSession: incomplete environment");
  require(arm == Arm::kServerOrder || env.model != nullptr,
          "ClientSession: model required for re-ranking arms");
  Rng net_rng(derive_seed(seed_, 1));
  net_path_ = sample_net_path(*env.params, env.params->max_session_depth + 1, net_rng);
  Json start = base_event("session_start");
  start["seed"] = env.seed;
  start["schema_version"] = features::kSchemaVersion;
  start["protocol"] = config_.protocol;
  events_.push_back(std::move(start));
}

Json ClientSession::base_event(const char* kind) const {
  return Json{{"event", kind},
              {"session_id", session_id_},
              {"user_id", user_->id()},
              {"arm", std::string(to_string(arm_))}};
}

NetCondition ClientSession::current_net() const {
  return net_path_[std::min<std::size_t>(consumed_, net_path_.size() - 1)];
}

ClientContext ClientSession::context() const {
  return {current_net(), consumed_ + 1, now_ms_};
}

void ClientSession::fetch_page() {
  decision_.page_fetched = true;
  decision_.discarded = ids_of(queue_);
  ++page_;
  Rng rng(derive_seed(seed_, 2, static_cast<std::uint64_t>(page_)));
  queue_ = env_.stub->respond(*user_, server_drift_, shown_, config_.protocol.page_return_total,
                              rng, config_.rerank.alpha, config_.rerank.beta);
  server_drift_.assign(user_->drift().begin(), user_->drift().end());
  page_candidates_ = queue_;
  Json ev = base_event("page_fetch");
  ev["page"] = page_;
  ev["consumed"] = consumed_;
  ev["video_ids"] = ids_of(queue_);
  ev["candidates"] = queue_;
  ev["discarded"] = decision_.discarded;
  events_.push_back(std::move(ev));
}

void ClientSession::reorder_queue(NextDecision& d) {
  d.queue_before = ids_of(queue_);
  d.rerank.reset();
  if (arm_ == Arm::kServerOrder) {
    std::stable_sort(queue_.begin(), queue_.end(), [](const Candidate& a, const Candidate& b) {
      return a.server_rank < b.server_rank;
    });
    d.queue_after = ids_of(queue_);
    return;
  }
  const rerank::ModelScorer scorer(*env_.model, history_, context());
  std::vector<int> order;
  Json ev = base_event("rerank");
  ev["position"] = consumed_ + 1;
  if (arm_ == Arm::kGreedy) {
    order = rerank::greedy_rank(queue_, scorer, config_.rerank.alpha, config_.rerank.beta);
  } else {
    RerankConfig rc = config_.rerank;
    rc.n_show = std::min<int>(rc.n_show, static_cast<int>(queue_.size()));
    auto result = rerank::adaptive_beam_search(queue_, scorer, rc);
    std::vector<char> placed(queue_.size(), 0);
    order = result.best.indices;
    for (int i : order) placed[i] = 1;
    for (int i = 0; i < static_cast<int>(queue_.size()); ++i) {
      if (!placed[i]) order.push_back(i);
    }
    ev["steps"] = result.steps;
    ev["early_stopped"] = result.early_stopped;
    ev["model_calls"] = result.model_calls;
    ev["best_list_reward"] = result.best.list_reward;
    Json trace = Json::array();
    for (const auto& s : result.trace) {
      trace.push_back({{"step", s.step}, {"stability", s.stability}, {"beam_scores", s.beam_scores}});
    }
    ev["trace"] = std::move(trace);
    d.rerank = std::move(result);
  }
  CandidateSet reordered;
  reordered.reserve(queue_.size());
  for (int i : order) reordered.push_back(queue_[i]);
  queue_ = std::move(reordered);
  d.queue_after = ids_of(queue_);
  ev["queue_before"] = d.queue_before;
  ev["queue_after"] = d.queue_after;
  ev["chosen"] = d.queue_after.front();
  events_.push_back(std::move(ev));
}

const NextDecision& ClientSession::next() {
  require(!finished_, "ClientSession: session already finished");
  require(!awaiting_, "ClientSession: feedback for the current video is pending");
  decision_ = NextDecision{};
  if (consumed_ == (page_ + 1) * config_.protocol.page_consume_m) fetch_page();
  require(!queue_.empty(), "ClientSession: candidate queue exhausted");
  reorder_queue(decision_);
  decision_.candidate = queue_.front();
  require(!shown_.contains(decision_.candidate.video.video_id),
          "ClientSession: duplicate impression");
  awaiting_ = true;
  return decision_;
}

void ClientSession::rerank_queue() {
  require(!awaiting_ && !finished_, "ClientSession: rerank_queue in wrong state");
  if (queue_.empty() || arm_ == Arm::kServerOrder) return;
  NextDecision d;
  reorder_queue(d);
}

void ClientSession::record(const Outcome& outcome) {
  require(awaiting_, "ClientSession: no video awaiting feedback");
  const Candidate& c = decision_.candidate;
  require(outcome.feedback.watch_time_s >= 0.0, "ClientSession: negative watch time");
  require(outcome.feedback.effective_view ==
              effective_view_label(outcome.feedback.watch_time_s, c.video.duration_s),
          "ClientSession: effective_view inconsistent with watch time");
  WatchedRecord r;
  r.video = c.video;
  r.server_scores = c.server_scores;
  r.feedback = outcome.feedback;
  r.impression_pos = consumed_ + 1;
  r.impression_ts_ms = now_ms_;

  Json ev = base_event("impression");
  ev["page"] = page_;
  ev["server_rank"] = c.server_rank;
  ev["net_condition"] = std::string(to_string(current_net()));
  ev["buffered_len_s"] = c.buffered_len_s;
  ev["has_next"] = outcome.has_next;
  ev["stalled"] = outcome.stalled;
  ev["video"] = r.video;
  ev["server_scores"] = r.server_scores;
  ev["feedback"] = r.feedback;
  ev["impression_ts_ms"] = r.impression_ts_ms;
  ev["impression_pos"] = r.impression_pos;
  events_.push_back(std::move(ev));

  history_.push(r);
  shown_.insert(c.video.video_id);
  queue_.erase(std::find_if(queue_.begin(), queue_.end(), [&](const Candidate& q) {
    return q.video.video_id == c.video.video_id;
  }));
  user_->update_drift(c.video, outcome);
  ++consumed_;
  now_ms_ += static_cast<std::int64_t>(
      std::llround((outcome.feedback.watch_time_s + config_.swipe_gap_s) * 1000.0));
  awaiting_ = false;
  if (!outcome.has_next) {
    finish("exit");
  } else if (consumed_ >= env_.params->max_session_depth) {
    finish("max_depth");
  }
}

void ClientSession::finish(std::string_view reason) {
  if (finished_) return;
  finished_ = true;
  awaiting_ = false;
  Json ev = base_event("session_end");
  ev["reason"] = std::string(reason);
  ev["consumed"] = consumed_;
  ev["pages"] = page_ + 1;
  events_.push_back(std::move(ev));
}

std::vector<PredictionTriple> ClientSession::queue_predictions() const {
  std::vector<PredictionTriple> out;
  if (!env_.model) return out;
  const rerank::ModelScorer scorer(*env_.model, history_, context());
  for (int i = 0; i < static_cast<int>(queue_.size()); ++i) {
    out.push_back(scorer.predict(queue_, {}, i));
  }
  return out;
}

SessionResult run_session(Arm arm, SyntheticUser user, const SessionEnv& env,
                          const SessionConfig& config, std::uint64_t session_id) {
  user.reset_session();
  ClientSession session(arm, user, env, config, session_id);
  SessionResult result;
  result.session_id = session_id;
  result.user_id = user.id();
  result.arm = arm;
  while (!session.finished()) {
    const NextDecision& d = session.next();
    const std::size_t idx = env.pool->index_of(d.candidate.video.video_id);
    Rng rng = feedback_stream(env.seed, session_id, session.consumed() + 1);
    const Outcome outcome =
        user.sample_feedback(d.candidate.video, env.pool->quality(idx), session.consumed(),
                             session.current_net(), d.candidate.buffered_len_s, rng);
    session.record(outcome);
    ++result.impressions;
    result.effective_views += outcome.feedback.effective_view;
    result.likes += outcome.feedback.like;
    result.follows += outcome.feedback.follow;
    result.like_at.push_back(outcome.feedback.like);
    result.effective_view_at.push_back(outcome.feedback.effective_view);
    if (config.like_trigger && outcome.feedback.like && !session.finished()) {
      session.rerank_queue();
    }
  }
  result.events = session.take_events();
  return result;
}

std::vector<LoggedImpression> read_impressions(const std::vector<Json>& events) {
  std::vector<LoggedImpression> out;
  // Unshown candidates of the current page, per (arm, session).
  std::map<std::pair<std::string, std::uint64_t>, std::map<VideoId, int>> unshown;
  for (const Json& e : events) {
    const std::string kind = e.value("event", "");
    if (kind == "page_fetch") {
      auto& page = unshown[{e.at("arm").get<std::string>(), e.at("session_id").get<std::uint64_t>()}];
      page.clear();
      for (const Json& c : e.at("candidates")) {
        const auto& video = c.at("video");
        page[video.at("video_id").get<VideoId>()] = video.at("category_id").get<int>();
      }
      continue;
    }
    if (kind != "impression") continue;
    LoggedImpression li;
    li.session_id = e.at("session_id").get<std::uint64_t>();
    li.user_id = e.at("user_id").get<std::uint64_t>();
    li.arm = e.at("arm").get<std::string>();
    li.page = e.at("page").get<int>();
    li.server_rank = e.at("server_rank").get<int>();
    li.net_condition = parse_net_condition(e.at("net_condition").get<std::string>());
    li.buffered_len_s = e.at("buffered_len_s").get<double>();
    li.has_next = e.at("has_next").get<bool>();
    li.record.video = e.at("video").get<VideoMeta>();
    li.record.server_scores = e.at("server_scores").get<ServerScores>();
    li.record.feedback = e.at("feedback").get<Feedback>();
    li.record.impression_ts_ms = e.at("impression_ts_ms").get<std::int64_t>();
    li.record.impression_pos = e.at("impression_pos").get<int>();
    const auto it = unshown.find({li.arm, li.session_id});
    if (it != unshown.end()) {
      for (const auto& [id, category] : it->second) li.queue_categories.push_back(category);
      it->second.erase(li.record.video.video_id);
    }
    out.push_back(std::move(li));
  }
  return out;
}

void for_each_session_log(std::istream& in, const std::function<void(std::vector<Json>)>& fn) {
  using Key = std::pair<std::string, std::uint64_t>;
  std::map<Key, std::vector<Json>> open;
  std::vector<Key> order;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json e = Json::parse(line, nullptr, false);
    if (e.is_discarded() || !e.is_object() || !e.contains("session_id") || !e.contains("arm")) {
      throw ConfigError("log line " + std::to_string(line_no) + " is not a session event");
    }
    const Key key{e.at("arm").get<std::string>(), e.at("session_id").get<std::uint64_t>()};
    const bool end = e.value("event", "") == "session_end";
    auto [it, fresh] = open.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.push_back(std::move(e));
    if (end) {
      fn(std::move(it->second));
      open.erase(it);
    }
  }
  for (const Key& key : order) {
    const auto it = open.find(key);
    if (it != open.end()) fn(std::move(it->second));
  }
}

namespace {

struct ReplayState {
  std::string arm;
  int page = -1;
  int consumed = 0;
  std::map<VideoId, int> page_ranks;
  std::set<VideoId> shown;
  std::set<VideoId> shown_this_page;
  std::int64_t last_ts = 0;
  bool exited = false;
  bool ended = false;
};

}  // namespace

ProtocolReport validate_protocol(const std::vector<Json>& events, const ProtocolConfig& protocol) {
  ProtocolReport report;
  std::map<std::uint64_t, ReplayState> sessions;
  const int m = protocol.page_consume_m;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Json& e = events[i];
    const std::string kind = e.value("event", "");
    const auto sid = e.value("session_id", std::uint64_t{0});
    const auto fail = [&](const std::string& what) {
      report.violations.push_back("session " + std::to_string(sid) + " event " +
                                  std::to_string(i) + " (" + kind + "): " + what);
    };
    if (kind == "session_start") {
      if (sessions.contains(sid)) fail("session started twice");
      sessions[sid].arm = e.value("arm", "");
      ++report.sessions;
      continue;
    }
    auto it = sessions.find(sid);
    if (it == sessions.end()) {
      fail("event before session_start");
      continue;
    }
    ReplayState& s = it->second;
    if (s.ended) {
      fail("event after session_end");
      continue;
    }
    if (kind == "page_fetch") {
      if (s.consumed != (s.page + 1) * m) {
        fail("page fetched at consumed " + std::to_string(s.consumed));
      }
      if (e.at("page").get<int>() != s.page + 1) fail("page counter skipped");
      std::set<VideoId> expected_discard;
      for (const auto& [id, rank] : s.page_ranks) {
        if (!s.shown_this_page.contains(id)) expected_discard.insert(id);
      }
      const auto discarded = e.at("discarded").get<std::vector<VideoId>>();
      if (std::set<VideoId>(discarded.begin(), discarded.end()) != expected_discard) {
        fail("discarded list does not match unshown leftovers");
      }
      report.discarded += static_cast<int>(discarded.size());
      const auto ids = e.at("video_ids").get<std::vector<VideoId>>();
      if (static_cast<int>(ids.size()) != protocol.page_return_total) {
        fail("page has " + std::to_string(ids.size()) + " candidates");
      }
      s.page_ranks.clear();
      s.shown_this_page.clear();
      for (std::size_t r = 0; r < ids.size(); ++r) {
        if (s.shown.contains(ids[r])) fail("page repeats an already shown video");
        s.page_ranks[ids[r]] = static_cast<int>(r);
      }
      ++s.page;
      ++report.page_fetches;
      report.fetch_consumed_counts.push_back(s.consumed);
    } else if (kind == "rerank") {
      const auto chosen = e.at("chosen").get<VideoId>();
      if (!s.page_ranks.contains(chosen) || s.shown.contains(chosen)) {
        fail("re-ranker chose a video outside the current queue");
      }
    } else if (kind == "impression") {
      if (s.exited) fail("impression after exit");
      if (s.consumed == (s.page + 1) * m) fail("missing page fetch");
      const auto rec_video = e.at("video").get<VideoMeta>();
      const VideoId id = rec_video.video_id;
      if (!s.page_ranks.contains(id)) fail("video not in the current page");
      if (s.shown.contains(id)) fail("duplicate impression");
      if (e.at("page").get<int>() != s.page) fail("impression tagged with wrong page");
      if (e.at("impression_pos").get<int>() != s.consumed + 1) fail("non-consecutive position");
      const auto ts = e.at("impression_ts_ms").get<std::int64_t>();
      if (s.consumed > 0 && ts < s.last_ts) fail("timestamp went backwards");
      const auto fb = e.at("feedback").get<Feedback>();
      if (fb.effective_view != effective_view_label(fb.watch_time_s, rec_video.duration_s)) {
        fail("effective_view label inconsistent with watch time");
      }
      if (s.arm == "server_order" && s.page_ranks.contains(id)) {
        int min_rank = protocol.page_return_total;
        for (const auto& [vid, rank] : s.page_ranks) {
          if (!s.shown_this_page.contains(vid)) min_rank = std::min(min_rank, rank);
        }
        if (s.page_ranks[id] != min_rank) fail("server_order arm skipped the server ranking");
      }
      s.last_ts = ts;
      s.shown.insert(id);
      s.shown_this_page.insert(id);
      ++s.consumed;
      ++report.impressions;
      if (!e.at("has_next").get<bool>()) s.exited = true;
    } else if (kind == "session_end") {
      const std::string reason = e.value("reason", "");
      if (reason == "exit" && !s.exited) fail("session ended with exit but last has_next is true");
      if (s.exited && reason != "exit") fail("user exited but session end reason is " + reason);
      if (e.value("consumed", -1) != s.consumed) fail("session_end consumed count mismatch");
      s.ended = true;
    } else {
      fail("unknown event kind");
    }
  }
  for (const auto& [sid, s] : sessions) {
    if (!s.ended) {
      report.violations.push_back("session " + std::to_string(sid) + " has no session_end");
    }
  }
  return report;
}

}  // namespace edgerank::sim
