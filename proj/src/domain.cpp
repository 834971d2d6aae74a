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

#include "edgerank/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace edgerank {

double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double VideoMeta::clamped_duration() const {
  return std::min(duration_s, kMaxDurationS);
}

bool ServerScores::valid() const {
  for (double p : as_array()) {
    if (!(p >= 0.0 && p <= 1.0)) return false;
  }
  return true;
}

WatchHistory::WatchHistory(std::size_t max_len) : max_len_(max_len) {
  require(max_len > 0, "WatchHistory: max_len must be positive");
  records_.reserve(max_len);
}

void WatchHistory::push(WatchedRecord record) {
  require(record.impression_pos >= 1, "WatchHistory: impression_pos must be >= 1");
  if (!records_.empty()) {
    require(record.impression_pos > records_.back().impression_pos,
            "WatchHistory: non-monotone impression_pos " +
                std::to_string(record.impression_pos) + " after " +
                std::to_string(records_.back().impression_pos));
  }
  if (records_.size() == max_len_) records_.erase(records_.begin());
  records_.push_back(std::move(record));
}

WatchHistory push_watched(WatchHistory history, WatchedRecord record) {
  history.push(std::move(record));
  return history;
}

std::string_view to_string(NetCondition net) {
  switch (net) {
    case NetCondition::kWifi: return "wifi";
    case NetCondition::kCellGood: return "cell_good";
    case NetCondition::kCellPoor: return "cell_poor";
    case NetCondition::kOfflineRisk: return "offline_risk";
  }
  return "wifi";
}

NetCondition parse_net_condition(std::string_view text) {
  if (text == "wifi") return NetCondition::kWifi;
  if (text == "cell_good") return NetCondition::kCellGood;
  if (text == "cell_poor") return NetCondition::kCellPoor;
  if (text == "offline_risk") return NetCondition::kOfflineRisk;
  throw ConfigError("unknown net_condition '" + std::string(text) + "'");
}

void RerankConfig::validate() const {
  if (beam_size_k < 1) throw ConfigError("beam_size_k must be >= 1");
  if (n_show < 1) throw ConfigError("n_show must be >= 1");
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (alpha < 0.0 || beta < 0.0) throw ConfigError("alpha and beta must be >= 0");
  if (stability_threshold_t &&
      !(*stability_threshold_t > 0.0 && *stability_threshold_t <= 1.0)) {
    throw ConfigError("stability_threshold_t must be in (0, 1]");
  }
}

void ProtocolConfig::validate() const {
  if (page_consume_m < 1) throw ConfigError("page_consume_m must be >= 1");
  if (page_return_total < page_consume_m) {
    throw ConfigError("page_return_total must be >= page_consume_m");
  }
}

double effective_view_threshold_s(double duration_s) {
  if (duration_s < 15.0) return 5.0;
  if (duration_s <= 600.0) return 10.0;
  return 20.0;
}

bool effective_view_label(double watch_time_s, double duration_s) {
  return watch_time_s >= effective_view_threshold_s(duration_s);
}

}  // namespace edgerank
