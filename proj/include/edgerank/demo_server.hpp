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

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "edgerank/demo.hpp"

// Local TCP transport for DemoSession. A connection speaks newline-delimited
// JSON unless its first line is an HTTP request asking for a WebSocket
// upgrade, in which case each text frame carries one message.
namespace edgerank::demo {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8765;
  // Stop after this many connections have closed (0 = serve forever).
  int max_connections = 0;
};

// Sec-WebSocket-Accept value for a client's Sec-WebSocket-Key.
std::string websocket_accept(std::string_view client_key);

// Unmasked server text frame.
std::string websocket_text_frame(std::string_view payload);

struct WebSocketFrame {
  int opcode = 0;
  bool fin = true;
  std::string payload;
  // Bytes consumed from the input.
  std::size_t size = 0;
};

// Parses one frame from the front of `data`; std::nullopt when incomplete.
// Throws ConfigError on frames a server must reject (unmasked client data,
// oversized payloads).
std::optional<WebSocketFrame> parse_websocket_frame(std::string_view data);

// Blocks until `stop` becomes true or max_connections is reached. Calls
// `on_listening(port)` once the socket is bound (port 0 picks a free port).
void serve(const sim::SessionEnv& env, const DemoConfig& config, const ServerOptions& options,
           const std::atomic<bool>& stop, const std::function<void(int)>& on_listening = {});

}  // namespace edgerank::demo
