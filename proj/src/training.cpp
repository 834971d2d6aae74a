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

#include "edgerank/training.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <map>
#include <numeric>

namespace edgerank::training {

namespace {
constexpr double kSmoothing = 0.98;
}

ImpressionDataset ImpressionDataset::from_impressions(
    std::vector<sim::LoggedImpression> impressions) {
  ImpressionDataset out;
  std::map<std::pair<std::string, std::uint64_t>, std::size_t> slot;
  for (auto& imp : impressions) {
    auto [it, fresh] = slot.try_emplace({imp.arm, imp.session_id}, out.sessions_.size());
    if (fresh) out.sessions_.emplace_back();
    out.sessions_[it->second].push_back(std::move(imp));
  }
  for (auto& s : out.sessions_) {
    std::stable_sort(s.begin(), s.end(), [](const auto& a, const auto& b) {
      return a.record.impression_pos < b.record.impression_pos;
    });
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (s[i].record.impression_pos == s[i - 1].record.impression_pos) {
        throw ConfigError("duplicate impression position in session " +
                          std::to_string(s[i].session_id));
      }
    }
    out.total_ += s.size();
  }
  return out;
}

ImpressionDataset ImpressionDataset::from_events(const std::vector<Json>& events) {
  return from_impressions(sim::read_impressions(events));
}

ImpressionDataset ImpressionDataset::from_ndjson(std::istream& in) {
  std::vector<sim::LoggedImpression> impressions;
  sim::for_each_session_log(in, [&](std::vector<Json> events) {
    auto session = sim::read_impressions(events);
    std::move(session.begin(), session.end(), std::back_inserter(impressions));
  });
  return from_impressions(std::move(impressions));
}

std::vector<SampleRef> ImpressionDataset::evaluation_samples() const {
  std::vector<SampleRef> out;
  out.reserve(total_);
  for (std::size_t s = 0; s < sessions_.size(); ++s) {
    for (std::size_t p = 0; p < sessions_[s].size(); ++p) {
      out.push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(p), 0});
    }
  }
  return out;
}

std::vector<SampleRef> ImpressionDataset::training_samples(int max_prefix, std::uint64_t seed,
                                                           bool within_page) const {
  auto out = evaluation_samples();
  for (auto& ref : out) {
    const auto& s = sessions_[ref.session];
    int available = static_cast<int>(ref.position);
    if (within_page) {
      available = 0;
      while (available < static_cast<int>(ref.position) &&
             s[ref.position - available - 1].page == s[ref.position].page) {
        ++available;
      }
    }
    const auto bound = static_cast<std::uint64_t>(std::min(max_prefix, available));
    ref.prefix_len = static_cast<std::uint8_t>(
        derive_seed(seed, ref.session, ref.position) % (bound + 1));
  }
  return out;
}

Candidate candidate_from_log(const sim::LoggedImpression& imp) {
  Candidate c;
  c.video = imp.record.video;
  c.server_scores = imp.record.server_scores;
  c.buffered_len_s = imp.buffered_len_s;
  c.server_rank = imp.server_rank;
  return c;
}

model::Example ImpressionDataset::build(const SampleRef& ref, const features::FeatureConfig& config,
                                        bool prefix_in_history) const {
  const auto& s = sessions_.at(ref.session);
  require(ref.position < s.size() && ref.prefix_len <= ref.position,
          "ImpressionDataset: sample out of range");
  const std::size_t first_prefix = ref.position - ref.prefix_len;
  const std::size_t hist_end = prefix_in_history ? ref.position : first_prefix;
  WatchHistory history(static_cast<std::size_t>(config.history_max_len));
  const auto max_len = static_cast<std::size_t>(config.history_max_len);
  const std::size_t hist_begin = hist_end > max_len ? hist_end - max_len : 0;
  for (std::size_t i = hist_begin; i < hist_end; ++i) history.push(s[i].record);

  std::vector<Candidate> prefix;
  prefix.reserve(ref.prefix_len);
  for (std::size_t i = first_prefix; i < ref.position; ++i) prefix.push_back(candidate_from_log(s[i]));
  std::vector<const Candidate*> ordered;
  for (const auto& c : prefix) ordered.push_back(&c);

  // The trigger sits at the first prefix item. With the prefix in the
  // history, net condition, clock and queue are read at the target instead.
  const auto& anchor = s[prefix_in_history ? ref.position : first_prefix];
  const ClientContext ctx{anchor.net_condition, s[first_prefix].record.impression_pos,
                          anchor.record.impression_ts_ms};
  const auto& target = s[ref.position];
  model::Example ex;
  ex.bundle = features::build_model_input(config, history, ordered, candidate_from_log(target), ctx,
                                          anchor.queue_categories);
  ex.labels = {target.has_next, target.record.feedback.effective_view, target.record.feedback.like};
  return ex;
}

std::pair<ImpressionDataset, ImpressionDataset> ImpressionDataset::split(
    int holdout_every, std::uint64_t seed) const {
  require(holdout_every >= 2, "split: holdout_every must be >= 2");
  std::pair<ImpressionDataset, ImpressionDataset> out;
  for (const auto& s : sessions_) {
    const bool held = derive_seed(seed, s.front().session_id) % holdout_every == 0;
    auto& dst = held ? out.second : out.first;
    dst.sessions_.push_back(s);
    dst.total_ += s.size();
  }
  return out;
}

void TrainConfig::validate() const {
  model.validate();
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
  if (!prefix_in_history && !prefix_within_page) {
    throw ConfigError("prefix_within_page is required when prefix_in_history is false");
  }
  if (max_prefix < 0 || max_prefix > model.features.ordered_max_len) {
    throw ConfigError("max_prefix must be in [0, ordered_max_len]");
  }
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

void to_json(Json& j, const TrainConfig& c) {
  j = Json{{"model", c.model},
           {"steps", c.steps},
           {"batch_size", c.batch_size},
           {"learning_rate", c.learning_rate},
           {"checkpoint_every", c.checkpoint_every},
           {"max_prefix", c.max_prefix},
           {"prefix_within_page", c.prefix_within_page},
           {"prefix_in_history", c.prefix_in_history},
           {"workers", c.workers},
           {"seed", c.seed}};
}

void from_json(const Json& j, TrainConfig& c) {
  if (j.contains("model")) j.at("model").get_to(c.model);
  if (j.contains("steps")) j.at("steps").get_to(c.steps);
  if (j.contains("batch_size")) j.at("batch_size").get_to(c.batch_size);
  if (j.contains("learning_rate")) j.at("learning_rate").get_to(c.learning_rate);
  if (j.contains("checkpoint_every")) j.at("checkpoint_every").get_to(c.checkpoint_every);
  if (j.contains("max_prefix")) j.at("max_prefix").get_to(c.max_prefix);
  if (j.contains("prefix_within_page")) j.at("prefix_within_page").get_to(c.prefix_within_page);
  if (j.contains("prefix_in_history")) j.at("prefix_in_history").get_to(c.prefix_in_history);
  if (j.contains("workers")) j.at("workers").get_to(c.workers);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
}

Trainer::Trainer(const TrainConfig& config, const ImpressionDataset& data)
    : config_(config),
      data_(&data),
      params_(model::ModelParams<float>::init(config.model, derive_seed(config.seed, 1))) {
  config_.validate();
  if (data.impressions() == 0) throw ConfigError("training data has no impressions");
  adam_.learning_rate = config_.learning_rate;
}

Trainer Trainer::resume(const TrainConfig& config, const ImpressionDataset& data,
                        const std::string& checkpoint_path) {
  Trainer t(config, data);
  auto file = model::load_file(checkpoint_path);
  if (!(file.params.config == config.model)) {
    throw ConfigError("checkpoint model config differs from the training config");
  }
  t.params_ = std::move(file.params);
  const auto& meta = file.metadata;
  if (!meta.contains("step") || file.extra.size() != 2) {
    throw ConfigError("'" + checkpoint_path + "' is not a training checkpoint");
  }
  t.adam_.step = meta.at("step").get<std::int64_t>();
  for (const auto& tensor : file.extra) {
    if (tensor.values.size() != t.params_.data.size()) {
      throw ConfigError("optimizer state size mismatch in checkpoint");
    }
    if (tensor.name == "adam.m") t.adam_.m = tensor.values;
    if (tensor.name == "adam.v") t.adam_.v = tensor.values;
  }
  if (meta.contains("smoothed_loss") && !meta.at("smoothed_loss").is_null()) {
    t.curve_.push_back({t.adam_.step, meta.at("last_loss").get<double>(),
                        meta.at("smoothed_loss").get<double>()});
  }
  return t;
}

std::vector<model::Example> Trainer::batch_for(std::int64_t step) const {
  const auto n = static_cast<std::int64_t>(data_->impressions());
  const std::int64_t first = step * config_.batch_size;
  std::vector<model::Example> batch;
  batch.reserve(config_.batch_size);
  for (std::int64_t g = first; g < first + config_.batch_size; ++g) {
    const std::int64_t epoch = g / n;
    if (epoch != cached_epoch_) {
      const std::uint64_t epoch_seed = derive_seed(config_.seed, 2, static_cast<std::uint64_t>(epoch));
      cached_samples_ = data_->training_samples(config_.max_prefix, epoch_seed,
                                                    config_.prefix_within_page);
      Rng rng(epoch_seed);
      std::shuffle(cached_samples_.begin(), cached_samples_.end(), rng);
      cached_epoch_ = epoch;
    }
    batch.push_back(data_->build(cached_samples_[static_cast<std::size_t>(g % n)],
                                 config_.model.features, config_.prefix_in_history));
  }
  return batch;
}

double Trainer::step() {
  const auto batch = batch_for(adam_.step);
  const double loss = model::train_step<float>(params_, batch, adam_, config_.workers);
  const double smoothed =
      curve_.empty() ? loss : kSmoothing * curve_.back().smoothed + (1.0 - kSmoothing) * loss;
  curve_.push_back({adam_.step, loss, smoothed});
  return loss;
}

void Trainer::run(const std::function<void(std::int64_t)>& on_checkpoint) {
  while (adam_.step < config_.steps) {
    step();
    if (on_checkpoint && (adam_.step % config_.checkpoint_every == 0 || adam_.step == config_.steps)) {
      on_checkpoint(adam_.step);
    }
  }
}

std::string Trainer::save_checkpoint(const std::string& path) const {
  Json meta{{"kind", "checkpoint"}, {"step", adam_.step}, {"train_config", config_}};
  meta["last_loss"] = curve_.empty() ? Json() : Json(curve_.back().loss);
  meta["smoothed_loss"] = curve_.empty() ? Json() : Json(curve_.back().smoothed);
  std::vector<model::NamedTensor> extra;
  const auto shape = std::vector<std::uint32_t>{static_cast<std::uint32_t>(params_.data.size())};
  const auto zeros = std::vector<float>(params_.data.size(), 0.0f);
  extra.push_back({"adam.m", shape, adam_.m.empty() ? zeros : adam_.m});
  extra.push_back({"adam.v", shape, adam_.v.empty() ? zeros : adam_.v});
  return model::save(params_, path, meta, extra);
}

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  require(scores.size() == labels.size(), "auc: size mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t r = i; r < j; ++r) {
      if (labels[order[r]]) {
        positive_rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) return kNoScore;
  const double p = static_cast<double>(positives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

namespace {
Json nullable(double v) { return std::isnan(v) ? Json() : Json(v); }
}  // namespace

void to_json(Json& j, const TaskAuc& a) {
  j = Json{{"has_next", nullable(a.has_next)},
           {"effective_view", nullable(a.effective_view)},
           {"like", nullable(a.like)}};
}

void to_json(Json& j, const EvalReport& r) {
  j = Json{{"impressions", r.impressions},
           {"model_auc", r.model},
           {"server_auc", r.server},
           {"log_loss", r.log_loss}};
}

EvalReport evaluate(const model::ModelParams<float>& params, const ImpressionDataset& data,
                    int workers) {
  const auto samples = data.evaluation_samples();
  const std::size_t n = samples.size();
  std::vector<PredictionTriple> preds(n);
  std::vector<model::TaskLabels> labels(n);
  std::vector<ServerScores> server(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const auto ex = data.build(samples[i], params.config.features);
    preds[i] = model::forward(params, ex.bundle);
    labels[i] = ex.labels;
    server[i] = data.session(samples[i].session)[samples[i].position].record.server_scores;
  });
  EvalReport report;
  report.impressions = n;
  std::vector<double> s_next(n), s_ev(n), s_like(n), srv_ev(n), srv_like(n);
  std::vector<std::uint8_t> y_next(n), y_ev(n), y_like(n);
  for (std::size_t i = 0; i < n; ++i) {
    s_next[i] = preds[i].p_has_next;
    s_ev[i] = preds[i].p_effective_view;
    s_like[i] = preds[i].p_like;
    srv_ev[i] = server[i].p_effective_view;
    srv_like[i] = server[i].p_like;
    y_next[i] = labels[i].has_next;
    y_ev[i] = labels[i].effective_view;
    y_like[i] = labels[i].like;
  }
  report.model = {auc(s_next, y_next), auc(s_ev, y_ev), auc(s_like, y_like)};
  report.server = {kNoScore, auc(srv_ev, y_ev), auc(srv_like, y_like)};
  if (n > 0) report.log_loss = model::multitask_log_loss(preds, labels, {1.0, 1.0, 1.0});
  return report;
}

}  // namespace edgerank::training
