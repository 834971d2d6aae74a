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

#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <future>
#include <map>
#include <numeric>
#include <thread>

#include "edgerank/demo_server.hpp"
#include "edgerank/weights_io.hpp"

namespace edgerank::demo {
namespace {

struct Env {
  sim::SimulatorParams params;
  sim::VideoPool pool;
  sim::ServerStub stub;
  model::ModelParams<float> model;
  sim::SessionEnv env;

  Env()
      : pool(sim::VideoPool::generate(params, 6)),
        stub(pool, params),
        model(model::ModelParams<float>::init(model::ModelConfig::desk(), 6)) {
    env = {&pool, &params, &stub, &model, 17};
  }
};

const Env& shared_env() {
  static const Env e;
  return e;
}

Json msg(std::string_view kind, Json payload = Json::object()) {
  return Json{{"kind", kind}, {"payload", std::move(payload)}};
}

std::vector<std::string> kinds(const std::vector<Json>& replies) {
  std::vector<std::string> out;
  for (const auto& r : replies) out.push_back(r.at("kind").get<std::string>());
  return out;
}

const Json& find_kind(const std::vector<Json>& replies, std::string_view kind) {
  for (const auto& r : replies) {
    if (r.at("kind") == kind) return r;
  }
  throw std::runtime_error("no " + std::string(kind) + " reply");
}

Json swipe(const std::vector<Json>& last, bool like = false, double watch = 12.0) {
  const auto id = find_kind(last, "next_video").at("payload").at("video").at("video_id");
  return msg("feedback", Json{{"video_id", id}, {"watch_time_s", watch}, {"like", like}, {"swipe", true}});
}

TEST(DemoMessage, KindNamesRoundTrip) {
  for (auto k : {MessageKind::kSessionStart, MessageKind::kNextVideo, MessageKind::kFeedback,
                 MessageKind::kRerankResult, MessageKind::kPageFetch, MessageKind::kMetrics,
                 MessageKind::kError}) {
    EXPECT_EQ(parse_kind(to_string(k)), k);
  }
  EXPECT_FALSE(parse_kind("hello").has_value());
}

TEST(DemoSession, StartStreamsTheFirstCard) {
  DemoSession s(shared_env().env, DemoConfig{});
  const auto replies = s.handle(msg("session_start"));
  EXPECT_EQ(kinds(replies), (std::vector<std::string>{"session_start", "page_fetch", "rerank_result",
                                                      "next_video", "metrics"}));
  const auto& start = replies[0].at("payload");
  EXPECT_EQ(start.at("schema_version"), features::kSchemaVersion);
  const auto& rerank = find_kind(replies, "rerank_result").at("payload");
  EXPECT_EQ(rerank.at("queue_after").front(),
            find_kind(replies, "next_video").at("payload").at("video").at("video_id"));
  EXPECT_EQ(rerank.at("predictions").size(), 9u);
  EXPECT_TRUE(rerank.contains("beam"));
  EXPECT_EQ(s.handle(msg("session_start"))[0].at("payload").at("code"), "already_started");
}

TEST(DemoSession, UnknownKindsAreRejectedAndTheSessionContinues) {
  DemoSession s(shared_env().env, DemoConfig{});
  auto replies = s.handle(msg("session_start"));
  const auto before = s.events().size();
  const auto bad = s.handle(msg("teleport"));
  ASSERT_EQ(bad.size(), 1u);
  EXPECT_EQ(bad[0].at("kind"), "error");
  EXPECT_EQ(bad[0].at("payload").at("code"), "unknown_kind");
  EXPECT_EQ(s.handle(std::string("{not json"))[0].at("payload").at("code"), "bad_json");
  EXPECT_EQ(s.handle(msg("next_video"))[0].at("payload").at("code"), "unexpected_kind");
  EXPECT_EQ(s.events().size(), before);
  replies = s.handle(swipe(replies));
  EXPECT_EQ(find_kind(replies, "metrics").at("payload").at("consumed"), 1);
}

TEST(DemoSession, FeedbackForAnotherVideoLeavesStateUnchanged) {
  DemoSession s(shared_env().env, DemoConfig{});
  const auto replies = s.handle(msg("session_start"));
  const auto before = s.events().size();
  auto wrong = swipe(replies);
  wrong["payload"]["video_id"] = 1;
  const auto out = s.handle(wrong);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].at("payload").at("code"), "not_current");
  EXPECT_EQ(s.events().size(), before);
  auto negative = swipe(replies);
  negative["payload"]["watch_time_s"] = -1.0;
  EXPECT_EQ(s.handle(negative)[0].at("payload").at("code"), "bad_payload");
  EXPECT_EQ(s.events().size(), before);
}

TEST(DemoSession, SequenceNumbersIncrease) {
  DemoSession s(shared_env().env, DemoConfig{});
  Json start = msg("session_start");
  start["seq"] = 5;
  auto replies = s.handle(start);
  std::int64_t last = 0;
  for (int i = 0; i < 4; ++i) {
    for (const auto& r : replies) {
      EXPECT_GT(r.at("seq").get<std::int64_t>(), last);
      last = r.at("seq").get<std::int64_t>();
    }
    Json fb = swipe(replies);
    fb["seq"] = 6 + i;
    replies = s.handle(fb);
  }
  Json stale = swipe(replies);
  stale["seq"] = 3;
  EXPECT_EQ(s.handle(stale)[0].at("payload").at("code"), "bad_seq");
}

TEST(DemoSession, TwelveActionsFollowThePaginationProtocol) {
  for (auto arm : {sim::Arm::kServerOrder, sim::Arm::kGreedy, sim::Arm::kContextAware}) {
    DemoConfig cfg;
    cfg.arm = arm;
    DemoSession s(shared_env().env, cfg);
    auto replies = s.handle(msg("session_start"));
    std::vector<int> fetch_at;
    for (int action = 1; action <= 12; ++action) {
      replies = s.handle(swipe(replies, action == 3 || action == 8, 2.0 + action));
      const auto k = kinds(replies);
      const auto fetch = std::find(k.begin(), k.end(), "page_fetch");
      if (fetch != k.end()) {
        EXPECT_LT(fetch - k.begin(), std::find(k.begin(), k.end(), "next_video") - k.begin());
        fetch_at.push_back(action);
      }
    }
    EXPECT_EQ(fetch_at, (std::vector<int>{6, 12}));
    const auto& metrics = find_kind(replies, "metrics").at("payload");
    EXPECT_EQ(metrics.at("likes"), 2);
    EXPECT_EQ(metrics.at("consumed"), 12);
    replies = s.handle(msg("feedback", Json{{"video_id", find_kind(replies, "next_video")
                                                              .at("payload").at("video").at("video_id")},
                                            {"watch_time_s", 1.0},
                                            {"swipe", false}}));
    EXPECT_TRUE(find_kind(replies, "metrics").at("payload").at("finished").get<bool>());
    EXPECT_TRUE(s.finished());
    const auto report = sim::validate_protocol(s.events(), cfg.session.protocol);
    EXPECT_TRUE(report.ok()) << report.violations.front();
    EXPECT_EQ(report.impressions, 13);
  }
}

TEST(WebSocket, AcceptKeyMatchesTheHandshakeExample) {
  EXPECT_EQ(websocket_accept("dGhlIHNhbXBsZSBub25jZQ=="), "s3pPLMBiTxaQ9kYGzzhZRbK+xOo=");
}

std::string client_frame(std::string_view payload, int opcode = 1) {
  std::string f;
  f.push_back(static_cast<char>(0x80 | opcode));
  const unsigned char mask[4] = {0x12, 0x34, 0x56, 0x78};
  if (payload.size() < 126) {
    f.push_back(static_cast<char>(0x80 | payload.size()));
  } else {
    f.push_back(static_cast<char>(0x80 | 126));
    f.push_back(static_cast<char>(payload.size() >> 8));
    f.push_back(static_cast<char>(payload.size() & 0xFF));
  }
  f.append(reinterpret_cast<const char*>(mask), 4);
  for (std::size_t i = 0; i < payload.size(); ++i) f.push_back(static_cast<char>(payload[i] ^ mask[i % 4]));
  return f;
}

TEST(WebSocket, FramesRoundTrip) {
  for (std::size_t n : {0u, 5u, 125u, 126u, 4000u}) {
    const std::string payload(n, 'x');
    const std::string wire = client_frame(payload);
    EXPECT_FALSE(parse_websocket_frame(std::string_view(wire).substr(0, wire.size() - 1)).has_value());
    const auto f = parse_websocket_frame(wire + "tail");
    ASSERT_TRUE(f.has_value());
    EXPECT_EQ(f->payload, payload);
    EXPECT_EQ(f->size, wire.size());
    EXPECT_EQ(f->opcode, 1);
  }
  const std::string server = websocket_text_frame("hello");
  EXPECT_EQ(static_cast<unsigned char>(server[0]), 0x81);
  EXPECT_EQ(server.substr(2), "hello");
  EXPECT_THROW(parse_websocket_frame(server), ConfigError);
}

class Client {
 public:
  explicit Client(int port) : fd_(::socket(AF_INET, SOCK_STREAM, 0)) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      throw std::runtime_error("connect failed");
    }
  }
  ~Client() { ::close(fd_); }
  void send(std::string_view data) { ASSERT_EQ(::send(fd_, data.data(), data.size(), 0), static_cast<ssize_t>(data.size())); }
  // Reads until `done(buffer)` or a 5 s timeout.
  std::string read_until(const std::function<bool(const std::string&)>& done) {
    std::string buffer;
    while (!done(buffer)) {
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, 5000) <= 0) break;
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
    }
    return buffer;
  }

 private:
  int fd_;
};

struct RunningServer {
  std::atomic<bool> stop{false};
  std::promise<int> port;
  std::thread thread;

  explicit RunningServer(int connections) {
    ServerOptions opts;
    opts.port = 0;
    opts.max_connections = connections;
    thread = std::thread([this, opts] {
      serve(shared_env().env, DemoConfig{}, opts, stop, [this](int p) { port.set_value(p); });
    });
  }
  ~RunningServer() {
    stop = true;
    thread.join();
  }
};

TEST(DemoSession, LikeRaisesSameCategoryPredictionsWithTheShippedModel) {
  sim::SimulatorParams params;
  const auto pool = sim::VideoPool::generate(params, 1);
  const sim::ServerStub stub(pool, params);
  const auto model = model::load(EDGERANK_DEMO_MODEL);
  const sim::SessionEnv env{&pool, &params, &stub, &model, 12345};

  std::vector<double> diffs;
  for (std::uint64_t persona = 0; persona < 40; ++persona) {
    DemoConfig cfg;
    cfg.persona = persona;
    cfg.session_id = persona;
    DemoSession liked(env, cfg), neutral(env, cfg);
    const auto first = liked.handle(msg("session_start"));
    neutral.handle(msg("session_start"));
    const int category =
        find_kind(first, "next_video").at("payload").at("video").at("category_id").get<int>();
    const auto a = find_kind(liked.handle(swipe(first, true)), "rerank_result").at("payload");
    const auto b = find_kind(neutral.handle(swipe(first, false)), "rerank_result").at("payload");
    std::map<VideoId, double> base;
    for (const auto& p : b.at("predictions")) base[p.at("video_id")] = p.at("p_like");
    for (const auto& p : a.at("predictions")) {
      if (p.at("category_id") != category) continue;
      diffs.push_back(p.at("p_like").get<double>() - base.at(p.at("video_id")));
    }
  }
  ASSERT_GE(diffs.size(), 5u);
  const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / diffs.size();
  EXPECT_GT(mean, 0.0);
  EXPECT_GE(std::count_if(diffs.begin(), diffs.end(), [](double d) { return d >= 0.0; }),
            static_cast<long>(diffs.size() * 3 / 4));
}

TEST(DemoServer, ServesNdjsonAndWebSocketConnections) {
  RunningServer server(2);
  const int port = server.port.get_future().get();
  {
    Client c(port);
    c.send(msg("session_start").dump() + "\n");
    const auto text = c.read_until([](const std::string& b) { return b.find("\"metrics\"") != std::string::npos; });
    std::vector<std::string> lines;
    for (std::size_t at = 0, nl; (nl = text.find('\n', at)) != std::string::npos; at = nl + 1) {
      lines.push_back(Json::parse(text.substr(at, nl - at)).at("kind").get<std::string>());
    }
    EXPECT_EQ(lines, (std::vector<std::string>{"session_start", "page_fetch", "rerank_result",
                                               "next_video", "metrics"}));
  }
  {
    Client c(port);
    c.send("GET /session HTTP/1.1\r\nHost: localhost\r\nUpgrade: websocket\r\n"
           "Connection: Upgrade\r\nSec-WebSocket-Key: dGhlIHNhbXBsZSBub25jZQ==\r\n"
           "Sec-WebSocket-Version: 13\r\n\r\n");
    const auto head = c.read_until([](const std::string& b) { return b.find("\r\n\r\n") != std::string::npos; });
    EXPECT_NE(head.find("101 Switching Protocols"), std::string::npos);
    EXPECT_NE(head.find("s3pPLMBiTxaQ9kYGzzhZRbK+xOo="), std::string::npos);
    c.send(client_frame(msg("bogus").dump()));
    const auto reply = c.read_until([](const std::string& b) { return b.size() >= 2 && b.size() >= 2u + (static_cast<unsigned char>(b[1]) & 0x7F); });
    ASSERT_GE(reply.size(), 2u);
    EXPECT_EQ(static_cast<unsigned char>(reply[0]), 0x81);
    const Json err = Json::parse(reply.substr(2, static_cast<unsigned char>(reply[1]) & 0x7F));
    EXPECT_EQ(err.at("kind"), "error");
    c.send(client_frame("", 8));
  }
}

}  // namespace
}  // namespace edgerank::demo
