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

#include "edgerank/demo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "edgerank/experiment.hpp"

namespace edgerank::demo {

namespace {

constexpr std::pair<MessageKind, std::string_view> kKindNames[] = {
    {MessageKind::kSessionStart, "session_start"}, {MessageKind::kNextVideo, "next_video"},
    {MessageKind::kFeedback, "feedback"},          {MessageKind::kRerankResult, "rerank_result"},
    {MessageKind::kPageFetch, "page_fetch"},       {MessageKind::kMetrics, "metrics"},
    {MessageKind::kError, "error"},
};

const std::vector<Json>& no_events() {
  static const std::vector<Json> empty;
  return empty;
}

Json prediction_json(const Candidate& c, const PredictionTriple& p) {
  return Json{{"video_id", c.video.video_id},
              {"category_id", c.video.category_id},
              {"server_rank", c.server_rank},
              {"p_has_next", p.p_has_next},
              {"p_effective_view", p.p_effective_view},
              {"p_like", p.p_like}};
}

}  // namespace

std::string_view to_string(MessageKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "error";
}

std::optional<MessageKind> parse_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

void to_json(Json& j, const DemoConfig& c) {
  j = Json{{"arm", std::string(sim::to_string(c.arm))},
           {"session", c.session},
           {"persona", c.persona},
           {"session_id", c.session_id}};
}

void from_json(const Json& j, DemoConfig& c) {
  if (j.contains("arm")) c.arm = sim::parse_arm(j.at("arm").get<std::string>());
  if (j.contains("session")) j.at("session").get_to(c.session);
  if (j.contains("persona")) j.at("persona").get_to(c.persona);
  if (j.contains("session_id")) j.at("session_id").get_to(c.session_id);
}

DemoSession::DemoSession(const sim::SessionEnv& env, DemoConfig config)
    : env_(env), config_(std::move(config)) {
  config_.session.validate();
}

const std::vector<Json>& DemoSession::events() const {
  return client_ ? client_->events() : no_events();
}

Json DemoSession::message(MessageKind kind, Json payload) {
  return Json{{"kind", std::string(to_string(kind))}, {"seq", ++out_seq_}, {"payload", std::move(payload)}};
}

Json DemoSession::error(std::string code, std::string detail) {
  return message(MessageKind::kError, Json{{"code", std::move(code)}, {"detail", std::move(detail)}});
}

std::vector<Json> DemoSession::handle(const std::string& line) {
  Json msg = Json::parse(line, nullptr, false);
  if (msg.is_discarded() || !msg.is_object()) return {error("bad_json", "message is not a JSON object")};
  return handle(msg);
}

std::vector<Json> DemoSession::handle(const Json& msg) {
  if (!msg.contains("kind") || !msg.at("kind").is_string()) {
    return {error("bad_message", "missing string field 'kind'")};
  }
  const std::string kind_text = msg.at("kind").get<std::string>();
  const auto kind = parse_kind(kind_text);
  if (!kind) return {error("unknown_kind", "unknown message kind '" + kind_text + "'")};
  if (msg.contains("seq")) {
    if (!msg.at("seq").is_number_integer()) return {error("bad_seq", "seq must be an integer")};
    const auto seq = msg.at("seq").get<std::int64_t>();
    if (last_in_seq_ && seq <= *last_in_seq_) {
      return {error("bad_seq", "seq must be strictly increasing")};
    }
    last_in_seq_ = seq;
  }
  const Json payload = msg.value("payload", Json::object());
  if (!payload.is_object()) return {error("bad_message", "payload must be an object")};
  try {
    switch (*kind) {
      case MessageKind::kSessionStart:
        return start(payload);
      case MessageKind::kFeedback:
        return feedback(payload);
      default:
        return {error("unexpected_kind", "clients may only send session_start and feedback")};
    }
  } catch (const Json::exception& e) {
    return {error("bad_payload", e.what())};
  } catch (const ConfigError& e) {
    return {error("bad_payload", e.what())};
  }
}

std::vector<Json> DemoSession::start(const Json& payload) {
  if (client_) return {error("already_started", "one session per connection")};
  DemoConfig cfg = config_;
  from_json(payload, cfg);
  cfg.session.validate();
  require(cfg.arm == sim::Arm::kServerOrder || env_.model != nullptr,
          "demo: re-ranking arms need a model");
  config_ = cfg;
  persona_ = std::make_unique<sim::SyntheticUser>(
      sim::experiment_user(*env_.params, env_.seed, config_.persona));
  client_ = std::make_unique<sim::ClientSession>(config_.arm, *persona_, env_, config_.session,
                                                 config_.session_id);
  std::vector<Json> out;
  out.push_back(message(MessageKind::kSessionStart,
                        Json{{"session_id", config_.session_id},
                             {"persona", config_.persona},
                             {"arm", std::string(sim::to_string(config_.arm))},
                             {"schema_version", features::kSchemaVersion},
                             {"protocol", config_.session.protocol},
                             {"rerank", config_.session.rerank}}));
  advance(out);
  return out;
}

std::vector<Json> DemoSession::feedback(const Json& payload) {
  if (!client_) return {error("not_started", "send session_start first")};
  if (client_->finished()) return {error("finished", "the session has ended")};
  const Candidate& current = client_->current();
  const auto video_id = payload.at("video_id").get<VideoId>();
  if (video_id != current.video.video_id) {
    return {error("not_current", "feedback for video " + std::to_string(video_id) +
                                     " but the current video is " +
                                     std::to_string(current.video.video_id))};
  }
  sim::Outcome outcome;
  Feedback& f = outcome.feedback;
  f.watch_time_s = payload.at("watch_time_s").get<double>();
  if (!(f.watch_time_s >= 0.0) || !std::isfinite(f.watch_time_s)) {
    return {error("bad_payload", "watch_time_s must be a finite non-negative number")};
  }
  f.like = payload.value("like", false);
  f.follow = payload.value("follow", false);
  f.share = payload.value("share", false);
  f.effective_view = effective_view_label(f.watch_time_s, current.video.duration_s);
  const double threshold = effective_view_threshold_s(current.video.duration_s);
  outcome.skip = !f.effective_view && f.watch_time_s < env_.params->skip_fraction * threshold;
  outcome.has_next = payload.value("swipe", true);
  client_->record(outcome);
  likes_ += f.like;
  effective_views_ += f.effective_view;
  follows_ += f.follow;

  std::vector<Json> out;
  if (client_->finished()) {
    out.push_back(message(MessageKind::kMetrics, metrics_payload()));
    return out;
  }
  advance(out);
  return out;
}

void DemoSession::advance(std::vector<Json>& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const sim::NextDecision& d = client_->next();
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  ++reranks_;
  rerank_ms_total_ += ms;
  const CandidateSet& queue = client_->queue();

  if (d.page_fetched) {
    const auto& log = client_->events();
    const auto fetch = std::find_if(log.rbegin(), log.rend(), [](const Json& e) {
      return e.value("event", "") == "page_fetch";
    });
    out.push_back(message(MessageKind::kPageFetch, Json{{"page", client_->page()},
                                                        {"consumed", client_->consumed()},
                                                        {"candidates", fetch->at("candidates")},
                                                        {"discarded", d.discarded}}));
  }

  int min_rank = queue.front().server_rank;
  for (const auto& c : queue) min_rank = std::min(min_rank, c.server_rank);
  server_order_agreements_ += d.candidate.server_rank == min_rank;

  Json predictions = Json::array();
  const auto preds = client_->queue_predictions();
  for (std::size_t i = 0; i < preds.size(); ++i) predictions.push_back(prediction_json(queue[i], preds[i]));
  Json result{{"position", client_->consumed() + 1},
              {"queue_before", d.queue_before},
              {"queue_after", d.queue_after},
              {"predictions", predictions},
              {"elapsed_ms", ms}};
  if (d.rerank) {
    Json trace = Json::array();
    for (const auto& s : d.rerank->trace) {
      trace.push_back({{"step", s.step}, {"stability", s.stability}, {"beam_scores", s.beam_scores}});
    }
    result["beam"] = Json{{"steps", d.rerank->steps},
                          {"early_stopped", d.rerank->early_stopped},
                          {"model_calls", d.rerank->model_calls},
                          {"best_list_reward", d.rerank->best.list_reward},
                          {"trace", trace}};
  }
  out.push_back(message(MessageKind::kRerankResult, std::move(result)));

  out.push_back(message(MessageKind::kNextVideo,
                        Json{{"position", client_->consumed() + 1},
                             {"page", client_->page()},
                             {"video", d.candidate.video},
                             {"server_scores", d.candidate.server_scores},
                             {"server_rank", d.candidate.server_rank},
                             {"buffered_len_s", d.candidate.buffered_len_s},
                             {"net_condition", std::string(to_string(client_->current_net()))}}));
  out.push_back(message(MessageKind::kMetrics, metrics_payload()));
}

Json DemoSession::metrics_payload() const {
  const int consumed = client_->consumed();
  const double denom = consumed > 0 ? static_cast<double>(consumed) : 1.0;
  Json m{{"consumed", consumed},
         {"pages", client_->page() + 1},
         {"likes", likes_},
         {"effective_views", effective_views_},
         {"follows", follows_},
         {"like_rate", likes_ / denom},
         {"effective_view_rate", effective_views_ / denom},
         {"reranks", reranks_},
         {"mean_rerank_ms", reranks_ > 0 ? rerank_ms_total_ / reranks_ : 0.0},
         {"server_order_agreements", server_order_agreements_},
         {"finished", client_->finished()}};
  if (client_->finished()) m["reason"] = client_->events().back().value("reason", "");
  return m;
}

}  // namespace edgerank::demo
