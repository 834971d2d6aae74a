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

#include <istream>
#include <string>
#include <vector>

#include "json.hpp"

#include "edgerank/domain.hpp"

// JSON mapping for domain types. Field names match the type definitions; the
// event logs are one JSON object per line (ndjson).
namespace edgerank {

using Json = nlohmann::json;

void to_json(Json& j, const VideoMeta& v);
void from_json(const Json& j, VideoMeta& v);
void to_json(Json& j, const ServerScores& s);
void from_json(const Json& j, ServerScores& s);
void to_json(Json& j, const Feedback& f);
void from_json(const Json& j, Feedback& f);
void to_json(Json& j, const WatchedRecord& r);
void from_json(const Json& j, WatchedRecord& r);
void to_json(Json& j, const ClientContext& c);
void from_json(const Json& j, ClientContext& c);
void to_json(Json& j, const Candidate& c);
void from_json(const Json& j, Candidate& c);
void to_json(Json& j, const PredictionTriple& p);
void from_json(const Json& j, PredictionTriple& p);
void to_json(Json& j, const RerankConfig& c);
void from_json(const Json& j, RerankConfig& c);
void to_json(Json& j, const ProtocolConfig& c);
void from_json(const Json& j, ProtocolConfig& c);

void to_json(Json& j, const WatchHistory& h);
void from_json(const Json& j, WatchHistory& h);

// Deterministic compact serialization (sorted keys, shortest round-trip doubles).
std::string dump_line(const Json& j);

// Reads every non-empty line of an ndjson stream. Throws ConfigError with the
// line number on malformed input.
std::vector<Json> read_ndjson(std::istream& in);
std::vector<Json> read_ndjson_file(const std::string& path);

}  // namespace edgerank
