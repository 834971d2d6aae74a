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

#include "edgerank/demo_server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <openssl/evp.h>
#include <openssl/sha.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstring>
#include <list>
#include <thread>

namespace edgerank::demo {

namespace {

constexpr std::string_view kWebSocketGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
constexpr std::size_t kMaxPayload = 1 << 20;
constexpr int kPollMs = 200;

class Fd {
 public:
  explicit Fd(int fd) : fd_(fd) {}
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const { return fd_; }

 private:
  int fd_;
};

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n <= 0) return false;
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

// Appends available bytes to `buffer`; false on EOF, error or stop.
bool read_more(int fd, std::string& buffer, const std::atomic<bool>& stop) {
  while (!stop.load()) {
    pollfd p{fd, POLLIN, 0};
    const int ready = ::poll(&p, 1, kPollMs);
    if (ready < 0) return false;
    if (ready == 0) continue;
    char chunk[4096];
    const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n <= 0) return false;
    buffer.append(chunk, static_cast<std::size_t>(n));
    return true;
  }
  return false;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::string header_value(std::string_view request, std::string_view name) {
  const std::string wanted = lower(std::string(name));
  std::size_t pos = request.find("\r\n");
  while (pos != std::string_view::npos && pos + 2 < request.size()) {
    const std::size_t end = request.find("\r\n", pos + 2);
    const auto line = request.substr(pos + 2, end - pos - 2);
    const auto colon = line.find(':');
    if (colon != std::string_view::npos && lower(trim(line.substr(0, colon))) == wanted) {
      return trim(line.substr(colon + 1));
    }
    pos = end;
  }
  return {};
}

void serve_ndjson(int fd, std::string buffer, DemoSession& session, const std::atomic<bool>& stop) {
  while (true) {
    std::size_t nl;
    while ((nl = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty()) continue;
      std::string out;
      for (const Json& reply : session.handle(line)) out += reply.dump() + "\n";
      if (!send_all(fd, out)) return;
    }
    if (buffer.size() > kMaxPayload || !read_more(fd, buffer, stop)) return;
  }
}

void serve_websocket(int fd, std::string buffer, DemoSession& session,
                     const std::atomic<bool>& stop) {
  const auto header_end = [&] { return buffer.find("\r\n\r\n"); };
  while (header_end() == std::string::npos) {
    if (buffer.size() > 16384 || !read_more(fd, buffer, stop)) return;
  }
  const std::size_t end = header_end();
  const std::string request = buffer.substr(0, end + 2);
  buffer.erase(0, end + 4);
  const std::string key = header_value(request, "Sec-WebSocket-Key");
  if (key.empty() || lower(header_value(request, "Upgrade")) != "websocket") {
    send_all(fd, "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\nConnection: close\r\n\r\n");
    return;
  }
  if (!send_all(fd, "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\n"
                    "Connection: Upgrade\r\nSec-WebSocket-Accept: " +
                        websocket_accept(key) + "\r\n\r\n")) {
    return;
  }
  std::string message;
  while (true) {
    std::optional<WebSocketFrame> frame;
    try {
      frame = parse_websocket_frame(buffer);
    } catch (const ConfigError&) {
      send_all(fd, std::string("\x88\x02\x03\xea", 4));  // close 1002
      return;
    }
    if (!frame) {
      if (!read_more(fd, buffer, stop)) return;
      continue;
    }
    buffer.erase(0, frame->size);
    switch (frame->opcode) {
      case 0x0:
      case 0x1:
        message += frame->payload;
        if (message.size() > kMaxPayload) return;
        if (frame->fin) {
          std::string out;
          for (const Json& reply : session.handle(message)) out += websocket_text_frame(reply.dump());
          message.clear();
          if (!send_all(fd, out)) return;
        }
        break;
      case 0x8:
        send_all(fd, std::string("\x88\x00", 2));
        return;
      case 0x9: {
        std::string pong = websocket_text_frame(frame->payload);
        pong[0] = static_cast<char>(0x8A);
        if (!send_all(fd, pong)) return;
        break;
      }
      default:
        break;
    }
  }
}

void handle_connection(int fd, const sim::SessionEnv& env, const DemoConfig& config,
                       const std::atomic<bool>& stop) {
  const Fd guard(fd);
  DemoSession session(env, config);
  std::string buffer;
  while (buffer.find('\n') == std::string::npos) {
    if (buffer.size() > 16384 || !read_more(fd, buffer, stop)) return;
  }
  if (buffer.rfind("GET ", 0) == 0) {
    serve_websocket(fd, std::move(buffer), session, stop);
  } else {
    serve_ndjson(fd, std::move(buffer), session, stop);
  }
}

}  // namespace

std::string websocket_accept(std::string_view client_key) {
  const std::string input = std::string(client_key) + std::string(kWebSocketGuid);
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(input.data()), input.size(), digest);
  unsigned char encoded[4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1];
  const int n = EVP_EncodeBlock(encoded, digest, SHA_DIGEST_LENGTH);
  return std::string(reinterpret_cast<const char*>(encoded), static_cast<std::size_t>(n));
}

std::string websocket_text_frame(std::string_view payload) {
  std::string frame;
  frame.push_back(static_cast<char>(0x81));
  const std::size_t n = payload.size();
  if (n < 126) {
    frame.push_back(static_cast<char>(n));
  } else if (n <= 0xFFFF) {
    frame.push_back(static_cast<char>(126));
    frame.push_back(static_cast<char>((n >> 8) & 0xFF));
    frame.push_back(static_cast<char>(n & 0xFF));
  } else {
    frame.push_back(static_cast<char>(127));
    for (int shift = 56; shift >= 0; shift -= 8) frame.push_back(static_cast<char>((n >> shift) & 0xFF));
  }
  frame.append(payload);
  return frame;
}

std::optional<WebSocketFrame> parse_websocket_frame(std::string_view data) {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(data[i]); };
  if (data.size() < 2) return std::nullopt;
  WebSocketFrame f;
  f.fin = (byte(0) & 0x80) != 0;
  f.opcode = byte(0) & 0x0F;
  const bool masked = (byte(1) & 0x80) != 0;
  if (!masked) throw ConfigError("websocket: client frames must be masked");
  std::uint64_t len = byte(1) & 0x7F;
  std::size_t pos = 2;
  if (len == 126) {
    if (data.size() < 4) return std::nullopt;
    len = (std::uint64_t{byte(2)} << 8) | byte(3);
    pos = 4;
  } else if (len == 127) {
    if (data.size() < 10) return std::nullopt;
    len = 0;
    for (std::size_t i = 2; i < 10; ++i) len = (len << 8) | byte(i);
    pos = 10;
  }
  if (len > kMaxPayload) throw ConfigError("websocket: frame too large");
  if (data.size() < pos + 4 + len) return std::nullopt;
  const std::size_t mask_at = pos;
  pos += 4;
  f.payload.resize(static_cast<std::size_t>(len));
  for (std::size_t i = 0; i < len; ++i) {
    f.payload[i] = static_cast<char>(byte(pos + i) ^ byte(mask_at + i % 4));
  }
  f.size = pos + static_cast<std::size_t>(len);
  return f;
}

void serve(const sim::SessionEnv& env, const DemoConfig& config, const ServerOptions& options,
           const std::atomic<bool>& stop, const std::function<void(int)>& on_listening) {
  const Fd listener(::socket(AF_INET, SOCK_STREAM, 0));
  if (listener.get() < 0) throw ConfigError("demo: cannot create socket");
  const int yes = 1;
  ::setsockopt(listener.get(), SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(options.port));
  if (::inet_pton(AF_INET, options.host.c_str(), &addr.sin_addr) != 1) {
    throw ConfigError("demo: invalid host '" + options.host + "'");
  }
  if (::bind(listener.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw ConfigError("demo: cannot bind " + options.host + ":" + std::to_string(options.port) +
                      ": " + std::strerror(errno));
  }
  if (::listen(listener.get(), 16) != 0) throw ConfigError("demo: listen failed");
  socklen_t len = sizeof(addr);
  ::getsockname(listener.get(), reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_listening) on_listening(ntohs(addr.sin_port));

  struct Worker {
    std::thread thread;
    std::atomic<bool> done{false};
  };
  std::list<Worker> workers;
  int accepted = 0;
  int closed = 0;
  const auto reap = [&] {
    for (auto it = workers.begin(); it != workers.end();) {
      if (it->done.load()) {
        it->thread.join();
        it = workers.erase(it);
        ++closed;
      } else {
        ++it;
      }
    }
  };
  while (!stop.load()) {
    reap();
    if (options.max_connections > 0 && closed >= options.max_connections) break;
    if (options.max_connections > 0 && accepted >= options.max_connections) {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
      continue;
    }
    pollfd p{listener.get(), POLLIN, 0};
    if (::poll(&p, 1, kPollMs) <= 0) continue;
    const int fd = ::accept(listener.get(), nullptr, nullptr);
    if (fd < 0) continue;
    ++accepted;
    Worker& w = workers.emplace_back();
    w.thread = std::thread([&env, &config, &stop, fd, &w] {
      try {
        handle_connection(fd, env, config, stop);
      } catch (const std::exception&) {
      }
      w.done.store(true);
    });
  }
  for (auto& w : workers) w.thread.join();
}

}  // namespace edgerank::demo
