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

#include "edgerank/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>

namespace edgerank::sim {

namespace {

constexpr std::uint64_t kUserStream = 0x75736572;
constexpr std::uint64_t kBootstrapStream = 0x626f6f74;
constexpr int kSessionChunk = 64;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

double relative(double arm, double base) { return base > 0.0 ? arm / base - 1.0 : kNaN; }

Json nullable(double v) { return std::isnan(v) ? Json() : Json(v); }

}  // namespace

void ExperimentConfig::validate() const {
  session.validate();
  if (arms.empty()) throw ConfigError("experiment needs at least one arm");
  if (std::find(arms.begin(), arms.end(), baseline) == arms.end()) {
    throw ConfigError("baseline arm must be one of the arms");
  }
  if (n_users < 1 || n_sessions < 1) throw ConfigError("n_users and n_sessions must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (bootstrap_samples < 1) throw ConfigError("bootstrap_samples must be >= 1");
  if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("confidence must be in (0, 1)");
}

void to_json(Json& j, const ExperimentConfig& c) {
  Json arms = Json::array();
  for (Arm a : c.arms) arms.push_back(std::string(to_string(a)));
  j = Json{{"arms", arms},
           {"baseline", std::string(to_string(c.baseline))},
           {"n_users", c.n_users},
           {"n_sessions", c.n_sessions},
           {"workers", c.workers},
           {"bootstrap_samples", c.bootstrap_samples},
           {"confidence", c.confidence},
           {"session", c.session}};
}

void from_json(const Json& j, ExperimentConfig& c) {
  if (j.contains("arms")) {
    c.arms.clear();
    for (const auto& a : j.at("arms")) c.arms.push_back(parse_arm(a.get<std::string>()));
  }
  if (j.contains("baseline")) c.baseline = parse_arm(j.at("baseline").get<std::string>());
  if (j.contains("n_users")) j.at("n_users").get_to(c.n_users);
  if (j.contains("n_sessions")) j.at("n_sessions").get_to(c.n_sessions);
  if (j.contains("workers")) j.at("workers").get_to(c.workers);
  if (j.contains("bootstrap_samples")) j.at("bootstrap_samples").get_to(c.bootstrap_samples);
  if (j.contains("confidence")) j.at("confidence").get_to(c.confidence);
  if (j.contains("session")) j.at("session").get_to(c.session);
}

SyntheticUser experiment_user(const SimulatorParams& params, std::uint64_t env_seed,
                              std::uint64_t user_id) {
  return SyntheticUser(params, user_id, derive_seed(env_seed, kUserStream, user_id));
}

const ArmMetrics& ExperimentReport::metrics(Arm arm) const {
  for (const auto& m : arms) {
    if (m.arm == arm) return m;
  }
  throw ContractViolation("report has no arm " + std::string(to_string(arm)));
}

const Uplift& ExperimentReport::uplift(Arm arm) const {
  for (const auto& u : uplifts) {
    if (u.arm == arm) return u;
  }
  throw ContractViolation("report has no uplift for arm " + std::string(to_string(arm)));
}

void to_json(Json& j, const ArmMetrics& m) {
  j = Json{{"arm", std::string(to_string(m.arm))},
           {"sessions", m.sessions},
           {"impressions", m.impressions},
           {"effective_views", m.effective_views},
           {"likes", m.likes},
           {"follows", m.follows},
           {"effective_view_rate", m.effective_view_rate},
           {"like_rate", m.like_rate},
           {"follow_rate", m.follow_rate},
           {"mean_depth", m.mean_depth},
           {"reached_at_depth", m.reached_at_depth},
           {"likes_at_depth", m.likes_at_depth}};
}

void to_json(Json& j, const Uplift& u) {
  Json by_depth = Json::array();
  for (double v : u.like_by_depth) by_depth.push_back(nullable(v));
  Json by_pos = Json::array();
  for (double v : u.like_by_page_position) by_pos.push_back(nullable(v));
  j = Json{{"arm", std::string(to_string(u.arm))},
           {"baseline", std::string(to_string(u.baseline))},
           {"like", nullable(u.like)},
           {"like_ci", {nullable(u.like_ci.low), nullable(u.like_ci.high)}},
           {"effective_view", nullable(u.effective_view)},
           {"effective_view_ci", {nullable(u.effective_view_ci.low), nullable(u.effective_view_ci.high)}},
           {"depth", nullable(u.depth)},
           {"like_by_depth", by_depth},
           {"like_by_page_position", by_pos}};
}

void to_json(Json& j, const ExperimentReport& r) {
  j = Json{{"header", r.header}, {"arms", r.arms}, {"uplifts", r.uplifts}};
}

PairedResults run_paired_sessions(const SessionEnv& env, const ExperimentConfig& config,
                                  const std::function<void(const SessionResult&)>& on_session) {
  config.validate();
  const int n_arms = static_cast<int>(config.arms.size());
  PairedResults results(n_arms, std::vector<SessionResult>(config.n_sessions));
  for (int begin = 0; begin < config.n_sessions; begin += kSessionChunk) {
    const int end = std::min(config.n_sessions, begin + kSessionChunk);
    const auto tasks = static_cast<std::size_t>((end - begin) * n_arms);
    parallel_for(tasks, config.workers, [&](std::size_t t) {
      const int s = begin + static_cast<int>(t) / n_arms;
      const int a = static_cast<int>(t) % n_arms;
      const auto user_id = static_cast<std::uint64_t>(s % config.n_users);
      results[a][s] = run_session(config.arms[a], experiment_user(*env.params, env.seed, user_id),
                                  env, config.session, static_cast<std::uint64_t>(s));
    });
    for (int s = begin; s < end; ++s) {
      for (int a = 0; a < n_arms; ++a) {
        if (on_session) on_session(results[a][s]);
        results[a][s].events.clear();
        results[a][s].events.shrink_to_fit();
      }
    }
  }
  return results;
}

namespace {

ArmMetrics arm_metrics(Arm arm, const std::vector<SessionResult>& sessions, int max_depth) {
  ArmMetrics m;
  m.arm = arm;
  m.sessions = static_cast<int>(sessions.size());
  m.reached_at_depth.assign(max_depth, 0);
  m.likes_at_depth.assign(max_depth, 0);
  for (const auto& r : sessions) {
    m.impressions += r.impressions;
    m.effective_views += r.effective_views;
    m.likes += r.likes;
    m.follows += r.follows;
    for (int d = 0; d < r.impressions && d < max_depth; ++d) {
      ++m.reached_at_depth[d];
      m.likes_at_depth[d] += r.like_at[d];
    }
  }
  const auto imps = static_cast<double>(m.impressions);
  m.effective_view_rate = ratio(static_cast<double>(m.effective_views), imps);
  m.like_rate = ratio(static_cast<double>(m.likes), imps);
  m.follow_rate = ratio(static_cast<double>(m.follows), imps);
  m.mean_depth = ratio(imps, static_cast<double>(m.sessions));
  return m;
}

Interval percentile_interval(std::vector<double> values, double confidence) {
  std::sort(values.begin(), values.end());
  const auto at = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  const double tail = 0.5 * (1.0 - confidence);
  return {at(tail), at(1.0 - tail)};
}

}  // namespace

ExperimentReport summarize(const PairedResults& results, const ExperimentConfig& config,
                           int max_depth, std::uint64_t seed) {
  require(results.size() == config.arms.size(), "summarize: one result list per arm");
  ExperimentReport report;
  for (std::size_t a = 0; a < results.size(); ++a) {
    report.arms.push_back(arm_metrics(config.arms[a], results[a], max_depth));
  }
  const auto base_index = static_cast<std::size_t>(
      std::find(config.arms.begin(), config.arms.end(), config.baseline) - config.arms.begin());
  const auto& base = results[base_index];
  const ArmMetrics& bm = report.arms[base_index];
  const std::size_t n = base.size();
  const int m = config.session.protocol.page_consume_m;

  for (std::size_t a = 0; a < results.size(); ++a) {
    if (a == base_index) continue;
    const auto& arm = results[a];
    require(arm.size() == n, "summarize: arms are not paired");
    const ArmMetrics& am = report.arms[a];
    Uplift u;
    u.arm = config.arms[a];
    u.baseline = config.baseline;
    u.like = relative(am.like_rate, bm.like_rate);
    u.effective_view = relative(am.effective_view_rate, bm.effective_view_rate);
    u.depth = relative(am.mean_depth, bm.mean_depth);

    Rng rng(derive_seed(seed, kBootstrapStream, a));
    std::vector<double> like_samples, ev_samples;
    like_samples.reserve(config.bootstrap_samples);
    ev_samples.reserve(config.bootstrap_samples);
    for (int b = 0; b < config.bootstrap_samples; ++b) {
      std::int64_t al = 0, ae = 0, ai = 0, bl = 0, be = 0, bi = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = rng() % n;
        al += arm[k].likes;
        ae += arm[k].effective_views;
        ai += arm[k].impressions;
        bl += base[k].likes;
        be += base[k].effective_views;
        bi += base[k].impressions;
      }
      like_samples.push_back(relative(ratio(al, ai), ratio(bl, bi)));
      ev_samples.push_back(relative(ratio(ae, ai), ratio(be, bi)));
    }
    u.like_ci = percentile_interval(like_samples, config.confidence);
    u.effective_view_ci = percentile_interval(ev_samples, config.confidence);

    u.like_by_depth.resize(max_depth);
    for (int d = 0; d < max_depth; ++d) {
      const double ar = ratio(static_cast<double>(am.likes_at_depth[d]), static_cast<double>(am.reached_at_depth[d]));
      const double br = ratio(static_cast<double>(bm.likes_at_depth[d]), static_cast<double>(bm.reached_at_depth[d]));
      u.like_by_depth[d] = am.reached_at_depth[d] > 0 && bm.likes_at_depth[d] > 0 ? relative(ar, br) : kNaN;
    }
    u.like_by_page_position.resize(m);
    for (int p = 0; p < m; ++p) {
      std::int64_t al = 0, ar = 0, bl = 0, br = 0;
      for (int d = p; d < max_depth; d += m) {
        al += am.likes_at_depth[d];
        ar += am.reached_at_depth[d];
        bl += bm.likes_at_depth[d];
        br += bm.reached_at_depth[d];
      }
      u.like_by_page_position[p] = relative(ratio(al, ar), ratio(bl, br));
    }
    report.uplifts.push_back(std::move(u));
  }
  // Self-comparison: identical results, uplift exactly zero.
  Uplift self;
  self.arm = self.baseline = config.baseline;
  self.like_by_depth.assign(max_depth, 0.0);
  self.like_by_page_position.assign(m, 0.0);
  report.uplifts.insert(report.uplifts.begin(), self);
  return report;
}

ExperimentReport run_experiment(const SessionEnv& env, const ExperimentConfig& config,
                                const std::function<void(const SessionResult&)>& on_session) {
  const auto results = run_paired_sessions(env, config, on_session);
  auto report = summarize(results, config, env.params->max_session_depth, env.seed);
  report.header = Json{{"seed", env.seed}, {"experiment", config}, {"simulator", *env.params}};
  return report;
}

PairedResults results_from_events(const std::vector<Json>& events, const std::vector<Arm>& arms) {
  std::vector<std::map<std::uint64_t, SessionResult>> by_arm(arms.size());
  for (const Json& e : events) {
    if (e.value("event", "") != "impression") continue;
    const Arm arm = parse_arm(e.at("arm").get<std::string>());
    const auto it = std::find(arms.begin(), arms.end(), arm);
    if (it == arms.end()) continue;
    const auto sid = e.at("session_id").get<std::uint64_t>();
    SessionResult& r = by_arm[static_cast<std::size_t>(it - arms.begin())][sid];
    r.session_id = sid;
    r.user_id = e.at("user_id").get<std::uint64_t>();
    r.arm = arm;
    const auto fb = e.at("feedback").get<Feedback>();
    const int pos = e.at("impression_pos").get<int>();
    if (pos != r.impressions + 1) {
      throw ConfigError("log for session " + std::to_string(sid) + " is out of order");
    }
    ++r.impressions;
    r.effective_views += fb.effective_view;
    r.likes += fb.like;
    r.follows += fb.follow;
    r.like_at.push_back(fb.like);
    r.effective_view_at.push_back(fb.effective_view);
  }
  PairedResults out(arms.size());
  for (std::size_t a = 0; a < arms.size(); ++a) {
    for (auto& [sid, r] : by_arm[a]) out[a].push_back(std::move(r));
  }
  for (std::size_t a = 1; a < arms.size(); ++a) {
    if (out[a].size() != out[0].size()) throw ConfigError("arms in the log are not paired");
    for (std::size_t i = 0; i < out[a].size(); ++i) {
      if (out[a][i].session_id != out[0][i].session_id) {
        throw ConfigError("arms in the log are not paired");
      }
    }
  }
  return out;
}

std::vector<StabilityRow> run_stability_bench(const SessionEnv& env, const SessionConfig& session,
                                              const StabilityBenchConfig& bench) {
  require(bench.max_steps >= 1 && bench.sessions >= 1 && bench.repeats >= 1,
          "stability bench: invalid configuration");
  SessionConfig cfg = session;
  cfg.rerank.beam_size_k = bench.beam_size_k;
  cfg.rerank.stability_threshold_t.reset();
  cfg.rerank.max_steps = bench.max_steps;
  cfg.validate();

  std::vector<double> stability_sum(bench.max_steps, 0.0);
  std::vector<std::int64_t> stability_n(bench.max_steps, 0);
  std::vector<double> latency_sum(bench.max_steps, 0.0);
  std::int64_t triggers = 0;

  for (int s = 0; s < bench.sessions; ++s) {
    auto user = experiment_user(*env.params, env.seed, static_cast<std::uint64_t>(s));
    ClientSession client(Arm::kContextAware, user, env, cfg, static_cast<std::uint64_t>(s));
    while (!client.finished()) {
      const NextDecision& d = client.next();
      for (const auto& st : d.rerank->trace) {
        stability_sum[st.step - 1] += st.stability;
        ++stability_n[st.step - 1];
      }
      const rerank::ModelScorer scorer(*env.model, client.history(), client.context());
      for (int limit = 1; limit <= bench.max_steps; ++limit) {
        RerankConfig rc = cfg.rerank;
        rc.max_steps = limit;
        const auto t0 = std::chrono::steady_clock::now();
        for (int r = 0; r < bench.repeats; ++r) {
          const auto result = rerank::adaptive_beam_search(client.queue(), scorer, rc);
          require(!result.best.indices.empty(), "stability bench: empty search result");
        }
        const auto t1 = std::chrono::steady_clock::now();
        latency_sum[limit - 1] +=
            std::chrono::duration<double, std::milli>(t1 - t0).count() / bench.repeats;
      }
      ++triggers;
      const std::size_t idx = env.pool->index_of(d.candidate.video.video_id);
      Rng rng = feedback_stream(env.seed, static_cast<std::uint64_t>(s), client.consumed() + 1);
      client.record(user.sample_feedback(d.candidate.video, env.pool->quality(idx),
                                         client.consumed(), client.current_net(),
                                         d.candidate.buffered_len_s, rng));
    }
  }
  std::vector<StabilityRow> rows;
  const double deepest = triggers > 0 ? latency_sum.back() / static_cast<double>(triggers) : 0.0;
  for (int step = 1; step <= bench.max_steps; ++step) {
    StabilityRow row;
    row.step = step;
    row.samples = stability_n[step - 1];
    row.mean_stability = ratio(stability_sum[step - 1], static_cast<double>(row.samples));
    row.mean_latency_ms = ratio(latency_sum[step - 1], static_cast<double>(triggers));
    row.relative_latency = ratio(row.mean_latency_ms, deepest);
    rows.push_back(row);
  }
  return rows;
}

void to_json(Json& j, const StabilityRow& r) {
  j = Json{{"step", r.step},
           {"mean_stability", r.mean_stability},
           {"samples", r.samples},
           {"mean_latency_ms", r.mean_latency_ms},
           {"relative_latency", r.relative_latency}};
}

}  // namespace edgerank::sim
