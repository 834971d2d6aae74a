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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "edgerank/session.hpp"

// Interactive session driven by a human over a message channel. Messages are
// JSON objects {"kind", "seq", "payload"}; see docs/demo_protocol.md.
namespace edgerank::demo {

enum class MessageKind {
  kSessionStart,
  kNextVideo,
  kFeedback,
  kRerankResult,
  kPageFetch,
  kMetrics,
  kError,
};

std::string_view to_string(MessageKind kind);
std::optional<MessageKind> parse_kind(std::string_view text);

struct DemoConfig {
  sim::Arm arm = sim::Arm::kContextAware;
  sim::SessionConfig session;
  // Id of the synthetic persona whose long-term interests the server uses.
  std::uint64_t persona = 0;
  std::uint64_t session_id = 0;
};

void to_json(Json& j, const DemoConfig& c);
void from_json(const Json& j, DemoConfig& c);

// State for one connection. Not thread-safe; the environment is shared
// read-only between connections.
class DemoSession {
 public:
  DemoSession(const sim::SessionEnv& env, DemoConfig config);

  // Handles one inbound line and returns the replies in send order. Never
  // throws on bad input: protocol errors become `error` messages and leave
  // the session unchanged.
  std::vector<Json> handle(const std::string& line);
  std::vector<Json> handle(const Json& message);

  bool started() const { return client_ != nullptr; }
  bool finished() const { return client_ && client_->finished(); }
  // The session log in the simulator's event format.
  const std::vector<Json>& events() const;

 private:
  std::vector<Json> start(const Json& payload);
  std::vector<Json> feedback(const Json& payload);
  void advance(std::vector<Json>& out);
  Json message(MessageKind kind, Json payload);
  Json error(std::string code, std::string detail);
  Json metrics_payload() const;

  sim::SessionEnv env_;
  DemoConfig config_;
  std::unique_ptr<sim::SyntheticUser> persona_;
  std::unique_ptr<sim::ClientSession> client_;
  std::int64_t out_seq_ = 0;
  std::optional<std::int64_t> last_in_seq_;
  int likes_ = 0;
  int effective_views_ = 0;
  int follows_ = 0;
  int reranks_ = 0;
  double rerank_ms_total_ = 0.0;
  int server_order_agreements_ = 0;
};

}  // namespace edgerank::demo
