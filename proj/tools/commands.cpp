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

#include "commands.hpp"

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <list>
#include <cmath>
#include <algorithm>
#include <atomic>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "edgerank/demo_server.hpp"
#include "edgerank/experiment.hpp"
#include "edgerank/training.hpp"
#include "edgerank/weights_io.hpp"

namespace edgerank::cli {

namespace fs = std::filesystem;

namespace {

// ---- resolved configuration --------------------------------------------------

struct Flag {
  std::string name;
  std::string pointer;
  std::string help;
};

struct Command {
  CLI::App* app = nullptr;
  Json defaults;
  std::vector<Flag> flags;
  std::map<std::string, std::optional<std::string>> values;
  std::string config_file;
  std::vector<std::string> sets;
  std::string out;
};

Json parse_value(const std::string& text) {
  Json v = Json::parse(text, nullptr, false);
  return v.is_discarded() ? Json(text) : v;
}

void set_existing(Json& doc, const std::string& pointer, const Json& value) {
  const Json::json_pointer ptr(pointer);
  if (!doc.contains(ptr)) throw ConfigError("unknown config field '" + pointer + "'");
  doc[ptr] = value;
}

std::string dotted_to_pointer(const std::string& dotted) {
  std::string out = "/";
  for (char c : dotted) out += c == '.' ? '/' : c;
  return out;
}

// defaults < --config file < --set key=value < named flags.
Json resolve(const Command& cmd) {
  Json doc = cmd.defaults;
  if (!cmd.config_file.empty()) {
    std::ifstream in(cmd.config_file);
    if (!in) throw ConfigError("cannot read config file '" + cmd.config_file + "'");
    const Json file = Json::parse(in, nullptr, false);
    if (file.is_discarded() || !file.is_object()) {
      throw ConfigError("config file '" + cmd.config_file + "' is not a JSON object");
    }
    for (const auto& [key, value] : file.flatten().items()) set_existing(doc, key, value);
  }
  for (const std::string& s : cmd.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    set_existing(doc, dotted_to_pointer(s.substr(0, eq)), parse_value(s.substr(eq + 1)));
  }
  for (const Flag& f : cmd.flags) {
    const auto& v = cmd.values.at(f.name);
    if (v) set_existing(doc, f.pointer, parse_value(*v));
  }
  return doc;
}

Command& add_command(CLI::App& root, std::list<Command>& commands, const std::string& name,
                     const std::string& description, Json defaults, std::vector<Flag> flags,
                     bool has_out = true) {
  Command& cmd = commands.emplace_back();
  cmd.app = root.add_subcommand(name, description);
  cmd.defaults = std::move(defaults);
  cmd.flags = std::move(flags);
  for (const Flag& f : cmd.flags) {
    cmd.values[f.name];
    cmd.app->add_option("--" + f.name, cmd.values[f.name], f.help + " (" + f.pointer + ")");
  }
  cmd.app->add_option("--config", cmd.config_file, "JSON file with config overrides");
  cmd.app->add_option("--set", cmd.sets, "Override any field: dotted.path=value");
  if (has_out) cmd.app->add_option("--out", cmd.out, "Output directory")->required();
  return cmd;
}

fs::path prepare_out(const Command& cmd, const Json& resolved) {
  const fs::path dir(cmd.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + cmd.out + "'");
  std::ofstream(dir / "config.json") << resolved.dump(2) << "\n";
  std::cerr << "resolved config written to " << (dir / "config.json").string() << "\n";
  return dir;
}

// ---- tables ---------------------------------------------------------------

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void print(std::ostream& os) const {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& r : rows) {
      for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    }
    const auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        os << (c ? "  " : "") << std::setw(static_cast<int>(width[c])) << cells[c];
      }
      os << "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
  }

  void write_tsv(const fs::path& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    const auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t c = 0; c < cells.size(); ++c) out << (c ? "\t" : "") << cells[c];
      out << "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
  }

  void emit(const fs::path& path, const std::string& title) const {
    std::cout << title << "\n";
    print(std::cout);
    std::cout << "\n";
    write_tsv(path);
  }
};

std::string num(double v, int precision = 6) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

// ---- shared environment ----------------------------------------------------------

struct World {
  sim::SimulatorParams params;
  sim::VideoPool pool;
  sim::ServerStub stub;
  std::optional<model::ModelParams<float>> model;
  std::uint64_t seed;

  World(const Json& doc, const std::string& model_path)
      : params(doc.at("simulator").get<sim::SimulatorParams>()),
        pool(sim::VideoPool::generate(params, doc.at("pool_seed").get<std::uint64_t>())),
        stub(pool, params),
        seed(doc.at("seed").get<std::uint64_t>()) {
    if (!model_path.empty()) model = model::load(model_path);
  }

  sim::SessionEnv env() const { return {&pool, &params, &stub, model ? &*model : nullptr, seed}; }
};

Json common_defaults() {
  return Json{{"seed", 12345},
              {"pool_seed", 1},
              {"simulator", sim::SimulatorParams{}},
              {"session", sim::SessionConfig{}}};
}

std::vector<Flag> common_flags() {
  return {{"seed", "/seed", "Session seed"}, {"pool-seed", "/pool_seed", "Video pool seed"}};
}

std::vector<Flag> with_common(std::vector<Flag> flags) {
  auto out = common_flags();
  out.insert(out.end(), flags.begin(), flags.end());
  return out;
}

std::string model_path(const Json& doc) {
  return doc.at("model").is_null() ? std::string() : doc.at("model").get<std::string>();
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  return in;
}

// ---- commands --------------------------------------------------------------------

int cmd_simulate(const Command& cmd) {
  const Json doc = resolve(cmd);
  const fs::path dir = prepare_out(cmd, doc);
  const World world(doc, model_path(doc));
  const auto session = doc.at("session").get<sim::SessionConfig>();
  const auto& run = doc.at("simulate");
  const sim::Arm arm = sim::parse_arm(run.at("arm").get<std::string>());
  const int sessions = run.at("sessions").get<int>();
  const int users = run.at("users").get<int>();
  if (sessions < 1 || users < 1) throw ConfigError("sessions and users must be >= 1");

  std::ofstream log(dir / "sessions.ndjson");
  std::int64_t impressions = 0, likes = 0, evs = 0;
  sim::ProtocolReport total;
  for (int s = 0; s < sessions; ++s) {
    const auto user = sim::experiment_user(world.params, world.seed, static_cast<std::uint64_t>(s % users));
    const auto r = sim::run_session(arm, user, world.env(), session, static_cast<std::uint64_t>(s));
    for (const Json& e : r.events) log << e.dump() << "\n";
    const auto report = sim::validate_protocol(r.events, session.protocol);
    total.violations.insert(total.violations.end(), report.violations.begin(), report.violations.end());
    total.page_fetches += report.page_fetches;
    total.discarded += report.discarded;
    impressions += r.impressions;
    likes += r.likes;
    evs += r.effective_views;
  }
  log.close();
  const double n = static_cast<double>(std::max<std::int64_t>(impressions, 1));
  Table t{{"arm", "sessions", "impressions", "like_rate", "effective_view_rate", "mean_depth",
           "page_fetches", "discarded", "violations"},
          {{std::string(sim::to_string(arm)), std::to_string(sessions), std::to_string(impressions),
            num(likes / n), num(evs / n), num(static_cast<double>(impressions) / sessions),
            std::to_string(total.page_fetches), std::to_string(total.discarded),
            std::to_string(total.violations.size())}}};
  t.emit(dir / "summary.tsv", "simulation summary");
  if (!total.ok()) throw ContractViolation("protocol violation: " + total.violations.front());
  return 0;
}

Table auc_table(const training::EvalReport& r) {
  return Table{{"task", "model_auc", "server_auc"},
               {{"has_next", num(r.model.has_next), num(r.server.has_next)},
                {"effective_view", num(r.model.effective_view), num(r.server.effective_view)},
                {"like", num(r.model.like), num(r.server.like)}}};
}

int cmd_train(const Command& cmd) {
  const Json doc = resolve(cmd);
  const fs::path dir = prepare_out(cmd, doc);
  const auto config = doc.at("train").get<training::TrainConfig>();
  config.validate();
  const auto& data_spec = doc.at("data");
  auto in = open_input(data_spec.at("logs").get<std::string>());
  const auto all = training::ImpressionDataset::from_ndjson(in);
  const auto [train_set, held_out] =
      all.split(data_spec.at("holdout_every").get<int>(), data_spec.at("split_seed").get<std::uint64_t>());
  std::cerr << "training on " << train_set.impressions() << " impressions, holding out "
            << held_out.impressions() << "\n";

  const std::string resume = doc.at("resume").is_null() ? "" : doc.at("resume").get<std::string>();
  training::Trainer trainer = resume.empty() ? training::Trainer(config, train_set)
                                             : training::Trainer::resume(config, train_set, resume);
  Table checkpoints{{"step", "smoothed_loss", "file", "sha256"}, {}};
  trainer.run([&](std::int64_t step) {
    const std::string name = "checkpoint_" + std::to_string(step) + ".ewt";
    const std::string digest = trainer.save_checkpoint((dir / name).string());
    checkpoints.rows.push_back({std::to_string(step), num(trainer.curve().back().smoothed), name, digest});
    std::cerr << "step " << step << " smoothed loss " << trainer.curve().back().smoothed << "\n";
  });
  const Json meta{{"kind", "model"}, {"step", trainer.steps_done()}, {"train_config", config}};
  const std::string digest = model::save(trainer.params(), (dir / "model.ewt").string(), meta);

  Table loss{{"step", "loss", "smoothed_loss"}, {}};
  for (const auto& p : trainer.curve()) {
    loss.rows.push_back({std::to_string(p.step), num(p.loss, 8), num(p.smoothed, 8)});
  }
  loss.write_tsv(dir / "loss.tsv");
  checkpoints.emit(dir / "checkpoints.tsv", "checkpoints");

  const auto report = training::evaluate(trainer.params(), held_out, config.workers);
  std::ofstream(dir / "eval.json") << Json(report).dump(2) << "\n";
  auc_table(report).emit(dir / "auc.tsv", "held-out AUC (" + std::to_string(report.impressions) + " impressions)");
  std::cout << "model written to " << (dir / "model.ewt").string() << " sha256 " << digest << "\n";
  return 0;
}

int cmd_auc(const Command& cmd) {
  const Json doc = resolve(cmd);
  const fs::path dir = prepare_out(cmd, doc);
  const auto params = model::load(doc.at("model").get<std::string>());
  auto in = open_input(doc.at("logs").get<std::string>());
  const auto data = training::ImpressionDataset::from_ndjson(in);
  const auto report = training::evaluate(params, data, doc.at("workers").get<int>());
  std::ofstream(dir / "eval.json") << Json(report).dump(2) << "\n";
  auc_table(report).emit(dir / "auc.tsv", "AUC (" + std::to_string(report.impressions) + " impressions)");
  return 0;
}

int cmd_eval(const Command& cmd) {
  const Json doc = resolve(cmd);
  const fs::path dir = prepare_out(cmd, doc);
  const World world(doc, model_path(doc));
  Json exp_json = doc.at("experiment");
  exp_json["session"] = doc.at("session");
  const auto config = exp_json.get<sim::ExperimentConfig>();
  config.validate();

  std::ofstream log;
  if (doc.at("write_log").get<bool>()) log.open(dir / "sessions.ndjson");
  const auto report = sim::run_experiment(world.env(), config, [&](const sim::SessionResult& r) {
    if (!log.is_open()) return;
    for (const Json& e : r.events) log << e.dump() << "\n";
  });
  std::ofstream(dir / "report.json") << Json(report).dump(2) << "\n";

  Table arms{{"arm", "sessions", "impressions", "like_rate", "effective_view_rate", "follow_rate", "mean_depth"}, {}};
  for (const auto& m : report.arms) {
    arms.rows.push_back({std::string(sim::to_string(m.arm)), std::to_string(m.sessions),
                         std::to_string(m.impressions), num(m.like_rate), num(m.effective_view_rate),
                         num(m.follow_rate), num(m.mean_depth)});
  }
  arms.emit(dir / "arms.tsv", "per-arm metrics");

  Table uplift{{"arm", "baseline", "like_uplift", "like_ci_low", "like_ci_high", "ev_uplift",
                "ev_ci_low", "ev_ci_high", "depth_uplift"}, {}};
  for (const auto& u : report.uplifts) {
    uplift.rows.push_back({std::string(sim::to_string(u.arm)), std::string(sim::to_string(u.baseline)),
                           num(u.like), num(u.like_ci.low), num(u.like_ci.high), num(u.effective_view),
                           num(u.effective_view_ci.low), num(u.effective_view_ci.high), num(u.depth)});
  }
  uplift.emit(dir / "uplift.tsv", "uplift over " + std::string(sim::to_string(config.baseline)) +
                                      " (confidence " + num(config.confidence) + ")");

  Table by_pos{{"page_position"}, {}};
  Table by_depth{{"depth"}, {}};
  for (const auto& u : report.uplifts) {
    by_pos.header.push_back(std::string(sim::to_string(u.arm)));
    by_depth.header.push_back(std::string(sim::to_string(u.arm)));
  }
  const int m = config.session.protocol.page_consume_m;
  for (int p = 0; p < m; ++p) {
    std::vector<std::string> row{std::to_string(p + 1)};
    for (const auto& u : report.uplifts) row.push_back(num(u.like_by_page_position[p]));
    by_pos.rows.push_back(row);
  }
  const int depth = world.params.max_session_depth;
  for (int d = 0; d < depth; ++d) {
    const bool any = std::any_of(report.uplifts.begin(), report.uplifts.end(),
                                 [&](const auto& u) { return !std::isnan(u.like_by_depth[d]); });
    if (!any || report.arms.front().reached_at_depth[d] == 0) continue;
    std::vector<std::string> row{std::to_string(d + 1)};
    for (const auto& u : report.uplifts) row.push_back(num(u.like_by_depth[d]));
    by_depth.rows.push_back(row);
  }
  by_pos.emit(dir / "uplift_by_page_position.tsv", "like uplift by position within a page");
  by_depth.write_tsv(dir / "uplift_by_depth.tsv");
  return 0;
}

int cmd_bench_stability(const Command& cmd) {
  const Json doc = resolve(cmd);
  const fs::path dir = prepare_out(cmd, doc);
  const World world(doc, model_path(doc));
  if (!world.model) throw ConfigError("bench-stability needs --model");
  const auto& b = doc.at("bench");
  const sim::StabilityBenchConfig bench{b.at("sessions").get<int>(), b.at("max_steps").get<int>(),
                                        b.at("beam_size_k").get<int>(), b.at("repeats").get<int>()};
  if (bench.sessions < 1 || bench.max_steps < 1 || bench.beam_size_k < 1 || bench.repeats < 1) {
    throw ConfigError("bench fields must be >= 1");
  }
  const auto rows = sim::run_stability_bench(world.env(), doc.at("session").get<sim::SessionConfig>(), bench);
  Table stability{{"step", "mean_stability", "samples"}, {}};
  Table latency{{"step", "mean_latency_ms", "relative_latency"}, {}};
  for (const auto& r : rows) {
    stability.rows.push_back({std::to_string(r.step), num(r.mean_stability, 8), std::to_string(r.samples)});
    latency.rows.push_back({std::to_string(r.step), num(r.mean_latency_ms), num(r.relative_latency)});
  }
  stability.emit(dir / "stability.tsv", "beam stability by search step (k=" + std::to_string(bench.beam_size_k) + ")");
  latency.emit(dir / "latency.tsv", "search latency by step");
  return 0;
}

std::atomic<bool> g_stop{false};

int cmd_serve_demo(const Command& cmd) {
  const Json doc = resolve(cmd);
  const World world(doc, model_path(doc));
  auto demo_config = doc.at("demo").get<demo::DemoConfig>();
  demo_config.session = doc.at("session").get<sim::SessionConfig>();
  const auto& s = doc.at("server");
  const demo::ServerOptions options{s.at("host").get<std::string>(), s.at("port").get<int>(),
                                    s.at("max_connections").get<int>()};
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  demo::serve(world.env(), demo_config, options, g_stop, [&](int port) {
    std::cout << "demo listening on " << options.host << ":" << port << " (ndjson or websocket)"
              << std::endl;
  });
  return 0;
}

int cmd_schema(const Command& cmd) {
  const Json doc = resolve(cmd);
  model::ModelConfig config = doc.at("model_config").get<model::ModelConfig>();
  if (!model_path(doc).empty()) config = model::load(model_path(doc)).config;
  std::cout << features::feature_schema_json(config.features) << "\n";
  return 0;
}

int cmd_validate(const Command& cmd) {
  const Json doc = resolve(cmd);
  const auto protocol = doc.at("session").at("protocol").get<ProtocolConfig>();
  auto in = open_input(doc.at("logs").get<std::string>());
  sim::ProtocolReport total;
  sim::for_each_session_log(in, [&](std::vector<Json> events) {
    const auto r = sim::validate_protocol(events, protocol);
    total.sessions += r.sessions;
    total.impressions += r.impressions;
    total.page_fetches += r.page_fetches;
    total.discarded += r.discarded;
    total.violations.insert(total.violations.end(), r.violations.begin(), r.violations.end());
  });
  Table t{{"sessions", "impressions", "page_fetches", "discarded", "violations"},
          {{std::to_string(total.sessions), std::to_string(total.impressions),
            std::to_string(total.page_fetches), std::to_string(total.discarded),
            std::to_string(total.violations.size())}}};
  t.print(std::cout);
  for (std::size_t i = 0; i < std::min<std::size_t>(total.violations.size(), 20); ++i) {
    std::cout << "violation: " << total.violations[i] << "\n";
  }
  return total.ok() ? 0 : 1;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App root{"On-device context-aware re-ranking: simulator, trainer and tools"};
  root.require_subcommand(1);
  std::list<Command> commands;

  Json sim_doc = common_defaults();
  sim_doc["simulate"] = {{"arm", "server_order"}, {"sessions", 1000}, {"users", 500}};
  sim_doc["model"] = nullptr;
  Command& simulate = add_command(root, commands, "simulate", "Run sessions and write event logs",
                                  sim_doc,
                                  with_common({{"arm", "/simulate/arm", "Arm"},
                                               {"sessions", "/simulate/sessions", "Sessions"},
                                               {"users", "/simulate/users", "Distinct users"},
                                               {"model", "/model", "Model weights for re-ranking arms"}}));

  Json train_doc{{"train", training::TrainConfig{}},
                 {"data", {{"logs", ""}, {"holdout_every", 5}, {"split_seed", 1}}},
                 {"resume", nullptr}};
  Command& train = add_command(
      root, commands, "train", "Train the model on server_order logs", train_doc,
      {{"logs", "/data/logs", "NDJSON session log"},
       {"steps", "/train/steps", "Optimizer steps"},
       {"batch-size", "/train/batch_size", "Batch size"},
       {"learning-rate", "/train/learning_rate", "Adam learning rate"},
       {"checkpoint-every", "/train/checkpoint_every", "Steps between checkpoints"},
       {"max-prefix", "/train/max_prefix", "Longest ordered prefix sampled per example"},
       {"workers", "/train/workers", "Threads"},
       {"seed", "/train/seed", "Training seed"},
       {"holdout-every", "/data/holdout_every", "Every n-th session is held out"},
       {"resume", "/resume", "Checkpoint to resume from"}});

  Command& auc = add_command(root, commands, "auc", "Offline AUC of a model on logs",
                             Json{{"logs", ""}, {"model", ""}, {"workers", 1}},
                             {{"logs", "/logs", "NDJSON session log"},
                              {"model", "/model", "Model weights"},
                              {"workers", "/workers", "Threads"}});

  Json eval_doc = common_defaults();
  Json exp = sim::ExperimentConfig{};
  exp.erase("session");
  eval_doc["experiment"] = exp;
  eval_doc["model"] = nullptr;
  eval_doc["write_log"] = false;
  Command& eval = add_command(root, commands, "eval", "Paired A/B experiment over the arms", eval_doc,
                              with_common({{"model", "/model", "Model weights"},
                                           {"sessions", "/experiment/n_sessions", "Sessions per arm"},
                                           {"users", "/experiment/n_users", "Distinct users"},
                                           {"workers", "/experiment/workers", "Threads"},
                                           {"bootstrap-samples", "/experiment/bootstrap_samples", "Bootstrap resamples"},
                                           {"arms", "/experiment/arms", "JSON list of arms"},
                                           {"baseline", "/experiment/baseline", "Baseline arm"},
                                           {"write-log", "/write_log", "Also write sessions.ndjson"}}));

  Json bench_doc = common_defaults();
  bench_doc["bench"] = {{"sessions", 100}, {"max_steps", 5}, {"beam_size_k", 4}, {"repeats", 1}};
  bench_doc["model"] = nullptr;
  Command& bench = add_command(root, commands, "bench-stability", "Beam stability and latency per search step",
                               bench_doc,
                               with_common({{"model", "/model", "Model weights"},
                                            {"sessions", "/bench/sessions", "Sessions"},
                                            {"steps", "/bench/max_steps", "Deepest search step"},
                                            {"k", "/bench/beam_size_k", "Beam size"},
                                            {"repeats", "/bench/repeats", "Timing repeats per trigger"}}));

  Json demo_doc = common_defaults();
  demo_doc["demo"] = demo::DemoConfig{};
  demo_doc["demo"].erase("session");
  demo_doc["server"] = {{"host", "127.0.0.1"}, {"port", 8765}, {"max_connections", 0}};
  demo_doc["model"] = "data/demo_model.ewt";
  Command& serve = add_command(root, commands, "serve-demo", "Serve one interactive session per connection",
                               demo_doc,
                               with_common({{"model", "/model", "Model weights"},
                                            {"host", "/server/host", "Bind address"},
                                            {"port", "/server/port", "TCP port (0 = any free port)"},
                                            {"max-connections", "/server/max_connections", "Exit after n connections"},
                                            {"arm", "/demo/arm", "Arm served to the client"},
                                            {"persona", "/demo/persona", "Synthetic persona for the server side"}}),
                               false);

  Command& schema = add_command(root, commands, "schema", "Print the feature schema",
                                Json{{"model", nullptr}, {"model_config", model::ModelConfig::desk()}},
                                {{"model", "/model", "Read the config from this weights file"}}, false);

  Command& validate = add_command(root, commands, "validate", "Check session logs against the pagination protocol",
                                  Json{{"logs", ""}, {"session", sim::SessionConfig{}}},
                                  {{"logs", "/logs", "NDJSON session log"}}, false);

  try {
    root.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = root.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (*simulate.app) return cmd_simulate(simulate);
    if (*train.app) return cmd_train(train);
    if (*auc.app) return cmd_auc(auc);
    if (*eval.app) return cmd_eval(eval);
    if (*bench.app) return cmd_bench_stability(bench);
    if (*serve.app) return cmd_serve_demo(serve);
    if (*schema.app) return cmd_schema(schema);
    if (*validate.app) return cmd_validate(validate);
  } catch (const ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace edgerank::cli
