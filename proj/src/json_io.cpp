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

#include "edgerank/json_io.hpp"

#include <fstream>

namespace edgerank {

void to_json(Json& j, const VideoMeta& v) {
  j = Json{{"video_id", v.video_id}, {"category_id", v.category_id},
           {"duration_s", v.duration_s}};
}

void from_json(const Json& j, VideoMeta& v) {
  j.at("video_id").get_to(v.video_id);
  j.at("category_id").get_to(v.category_id);
  j.at("duration_s").get_to(v.duration_s);
}

void to_json(Json& j, const ServerScores& s) {
  j = Json{{"p_effective_view", s.p_effective_view},
           {"p_like", s.p_like},
           {"p_follow", s.p_follow}};
}

void from_json(const Json& j, ServerScores& s) {
  j.at("p_effective_view").get_to(s.p_effective_view);
  j.at("p_like").get_to(s.p_like);
  j.at("p_follow").get_to(s.p_follow);
}

void to_json(Json& j, const Feedback& f) {
  j = Json{{"effective_view", f.effective_view}, {"like", f.like},
           {"follow", f.follow},                 {"share", f.share},
           {"watch_time_s", f.watch_time_s}};
}

void from_json(const Json& j, Feedback& f) {
  j.at("effective_view").get_to(f.effective_view);
  j.at("like").get_to(f.like);
  j.at("follow").get_to(f.follow);
  j.at("share").get_to(f.share);
  j.at("watch_time_s").get_to(f.watch_time_s);
}

void to_json(Json& j, const WatchedRecord& r) {
  j = Json{{"video", r.video},
           {"server_scores", r.server_scores},
           {"feedback", r.feedback},
           {"impression_ts_ms", r.impression_ts_ms},
           {"impression_pos", r.impression_pos}};
}

void from_json(const Json& j, WatchedRecord& r) {
  j.at("video").get_to(r.video);
  j.at("server_scores").get_to(r.server_scores);
  j.at("feedback").get_to(r.feedback);
  j.at("impression_ts_ms").get_to(r.impression_ts_ms);
  j.at("impression_pos").get_to(r.impression_pos);
}

void to_json(Json& j, const ClientContext& c) {
  j = Json{{"net_condition", std::string(to_string(c.net_condition))},
           {"next_impression_pos", c.next_impression_pos},
           {"now_ts_ms", c.now_ts_ms}};
}

void from_json(const Json& j, ClientContext& c) {
  c.net_condition = parse_net_condition(j.at("net_condition").get<std::string>());
  j.at("next_impression_pos").get_to(c.next_impression_pos);
  j.at("now_ts_ms").get_to(c.now_ts_ms);
}

void to_json(Json& j, const Candidate& c) {
  j = Json{{"video", c.video},
           {"server_scores", c.server_scores},
           {"buffered_len_s", c.buffered_len_s},
           {"server_rank", c.server_rank}};
}

void from_json(const Json& j, Candidate& c) {
  j.at("video").get_to(c.video);
  j.at("server_scores").get_to(c.server_scores);
  j.at("buffered_len_s").get_to(c.buffered_len_s);
  j.at("server_rank").get_to(c.server_rank);
}

void to_json(Json& j, const PredictionTriple& p) {
  j = Json{{"p_has_next", p.p_has_next},
           {"p_effective_view", p.p_effective_view},
           {"p_like", p.p_like}};
}

void from_json(const Json& j, PredictionTriple& p) {
  j.at("p_has_next").get_to(p.p_has_next);
  j.at("p_effective_view").get_to(p.p_effective_view);
  j.at("p_like").get_to(p.p_like);
}

void to_json(Json& j, const RerankConfig& c) {
  j = Json{{"beam_size_k", c.beam_size_k},
           {"n_show", c.n_show},
           {"stability_threshold_t",
            c.stability_threshold_t ? Json(*c.stability_threshold_t) : Json("disabled")},
           {"alpha", c.alpha},
           {"beta", c.beta},
           {"max_steps", c.max_steps},
           {"selection", c.selection == BeamSelection::kNested ? "nested" : "topk"}};
}

void from_json(const Json& j, RerankConfig& c) {
  if (j.contains("beam_size_k")) j.at("beam_size_k").get_to(c.beam_size_k);
  if (j.contains("n_show")) j.at("n_show").get_to(c.n_show);
  if (j.contains("stability_threshold_t")) {
    const Json& t = j.at("stability_threshold_t");
    if (t.is_string()) {
      if (t.get<std::string>() != "disabled") {
        throw ConfigError("stability_threshold_t must be a number or \"disabled\"");
      }
      c.stability_threshold_t.reset();
    } else {
      c.stability_threshold_t = t.get<double>();
    }
  }
  if (j.contains("alpha")) j.at("alpha").get_to(c.alpha);
  if (j.contains("beta")) j.at("beta").get_to(c.beta);
  if (j.contains("max_steps")) j.at("max_steps").get_to(c.max_steps);
  if (j.contains("selection")) {
    const auto s = j.at("selection").get<std::string>();
    if (s == "nested") {
      c.selection = BeamSelection::kNested;
    } else if (s == "topk") {
      c.selection = BeamSelection::kTopK;
    } else {
      throw ConfigError("selection must be \"nested\" or \"topk\"");
    }
  }
}

void to_json(Json& j, const ProtocolConfig& c) {
  j = Json{{"page_consume_m", c.page_consume_m},
           {"page_return_total", c.page_return_total}};
}

void from_json(const Json& j, ProtocolConfig& c) {
  if (j.contains("page_consume_m")) j.at("page_consume_m").get_to(c.page_consume_m);
  if (j.contains("page_return_total")) j.at("page_return_total").get_to(c.page_return_total);
}

void to_json(Json& j, const WatchHistory& h) {
  j = Json{{"max_len", h.max_len()}, {"records", Json::array()}};
  for (const auto& r : h.records()) j["records"].push_back(r);
}

void from_json(const Json& j, WatchHistory& h) {
  WatchHistory out(j.at("max_len").get<std::size_t>());
  for (const auto& r : j.at("records")) out.push(r.get<WatchedRecord>());
  h = std::move(out);
}

std::string dump_line(const Json& j) { return j.dump(); }

std::vector<Json> read_ndjson(std::istream& in) {
  std::vector<Json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw ConfigError("malformed ndjson at line " + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return out;
}

std::vector<Json> read_ndjson_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return read_ndjson(in);
}

}  // namespace edgerank
