// Copyright 2026 The liveness-gate Authors
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

#include <csignal>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include <boost/asio/signal_set.hpp>

#include "liveness/liveness.hpp"
#include "liveness/gateway.hpp"

namespace fs = std::filesystem;
using namespace liveness;

namespace {

constexpr int kExitPassed = 0;
constexpr int kExitFailed = 1;
constexpr int kExitInput = 2;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

SessionConfig load_config(const CommonOptions& o) {
  SessionConfig cfg;
  if (!o.config_path.empty()) cfg = read_config_file(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  validate(cfg);
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (const fs::path parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << text;
}

// -- run ------------------------------------------------------------------------

struct RunOptions : CommonOptions {
  std::string trajectory;
  std::string events;
};

int cmd_run(const RunOptions& o) {
  SessionConfig cfg;
  std::vector<LandmarkFrame> frames;
  try {
    cfg = load_config(o);
    frames = read_trajectory_file(o.trajectory);
  } catch (const LivenessError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }

  Session session(cfg);
  std::size_t used = 0;
  for (const auto& f : frames) {
    if (session.terminal()) break;
    try {
      session.ingest_frame(f);
    } catch (const OutOfOrderFrame& e) {
      std::cerr << "error: line " << used + 1 << ": " << e.what() << '\n';
      return kExitInput;
    }
    ++used;
  }
  if (!session.terminal()) session.abort(frames.empty() ? 0 : frames.back().t_ms);
  const SessionResult res = session.result();

  std::string events_path = o.events;
  if (events_path.empty() && !o.out.empty() && o.out != "-") {
    events_path = fs::path(o.out).replace_extension(".events.jsonl").string();
  }
  Json report = Json::object();
  report["verdict"] = std::string(to_string(res.verdict));
  report["label_live"] = res.label_live;
  report["fits_completed"] = res.fits_completed;
  report["elapsed_ms"] = res.elapsed_ms ? Json(*res.elapsed_ms) : Json(nullptr);
  report["seed"] = cfg.seed;
  report["frames_read"] = frames.size();
  report["frames_used"] = used;
  report["events"] = events_path.empty() ? Json(nullptr) : Json(events_path);
  try {
    if (!events_path.empty()) write_text(events_path, serialize_events(res.events));
    write_text(o.out, report.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  std::cerr << "verdict: " << to_string(res.verdict) << " (" << res.fits_completed << "/" << cfg.required_fits
            << " fits)\n";
  return res.label_live ? kExitPassed : kExitFailed;
}

// -- simulate ---------------------------------------------------------------------

struct SimulateOptions : CommonOptions {
  std::vector<std::string> agents;
  std::vector<int> trials;
  std::string csv;
  std::string record_dir;
  double jitter = AgentConfig{}.jitter_px;
  std::int64_t latency = AgentConfig{}.reaction_latency_ms;
  double gain = AgentConfig{}.gain;
  unsigned threads = 0;
};

int cmd_simulate(const SimulateOptions& o) {
  BatchSpec spec;
  try {
    spec.engine = load_config(o);
    spec.seed = o.seed.value_or(spec.engine.seed);
    if (o.agents.empty()) throw ValidationError("at least one --agent is required");
    if (o.trials.size() != 1 && o.trials.size() != o.agents.size()) {
      throw ValidationError("give one --trials for all agents or one per --agent");
    }
    for (std::size_t i = 0; i < o.agents.size(); ++i) {
      auto kind = agent_kind_from_string(o.agents[i]);
      if (!kind) throw ValidationError("unknown agent '" + o.agents[i] + "' (photo, replay, live)");
      const int n = o.trials.size() == 1 ? o.trials[0] : o.trials[i];
      if (n < 1) throw ValidationError("--trials must be >= 1");
      spec.classes.push_back({*kind, n});
    }
    spec.agent.jitter_px = o.jitter;
    spec.agent.reaction_latency_ms = o.latency;
    spec.agent.gain = o.gain;
    spec.agent.kind = AgentKind::LiveUser;
    validate(spec.agent);
    spec.threads = o.threads;
    spec.keep_frames = !o.record_dir.empty();
  } catch (const LivenessError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitInput;
  }

  const BatchReport rep = batch_evaluate(spec);
  try {
    write_text(o.out, report_json(rep).dump(2) + "\n");
    if (!o.csv.empty()) write_text(o.csv, report_csv(rep));
    if (!o.record_dir.empty()) {
      fs::create_directories(o.record_dir);
      std::ofstream manifest(fs::path(o.record_dir) / "trials.jsonl");
      for (const auto& t : rep.trials) {
        char name[64];
        std::snprintf(name, sizeof name, "%s_%04d.jsonl", std::string(to_string(t.kind)).c_str(), t.index);
        std::ofstream tr(fs::path(o.record_dir) / name);
        write_trajectory(tr, t.frames);
        manifest << Json{{"trajectory", name},
                         {"class", std::string(to_string(t.kind))},
                         {"index", t.index},
                         {"session_seed", t.session_seed},
                         {"verdict", std::string(to_string(t.verdict))}}
                        .dump()
                 << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  std::cerr << report_csv(rep);
  if (rep.partial) {
    std::cerr << "batch aborted: " << rep.error << '\n';
    return kExitFailed;
  }
  return 0;
}

// -- eval -------------------------------------------------------------------------

struct EvalOptions {
  std::optional<std::int64_t> bona_fide, attacks, false_accepts, false_rejects;
  std::string results;
  std::string out;
};

ConfusionCounts counts_from_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  ConfusionCounts c;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Json j = Json::parse(line);
      const std::string label = j.at("label").get<std::string>();
      const bool live = j.at("label_live").get<bool>();
      if (label == "bona_fide") {
        ++c.bona_fide_total;
        if (!live) ++c.false_rejects;
      } else if (label == "attack") {
        ++c.attack_total;
        if (live) ++c.false_accepts;
      } else {
        throw ParseError("label must be bona_fide or attack");
      }
    } catch (const Json::exception& e) {
      throw ParseError(e.what(), n);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), n);
    }
  }
  return c;
}

int cmd_eval(const EvalOptions& o) {
  try {
    ConfusionCounts c;
    if (!o.results.empty()) {
      c = counts_from_results(o.results);
    } else {
      if (!o.bona_fide || !o.attacks) throw ValidationError("need --results or --bona-fide and --attacks");
      c = {*o.bona_fide, *o.attacks, o.false_accepts.value_or(0), o.false_rejects.value_or(0)};
    }
    const EvalReport r = compute_metrics(c);
    write_text(o.out, metrics_json(r).dump(2) + "\n");
    std::cerr << "APCER% " << percent(r.apcer) << "  BPCER% " << percent(r.bpcer) << "  ACER% " << percent(r.acer)
              << "  Accuracy% " << percent(r.accuracy) << '\n';
  } catch (const LivenessError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return 0;
}

// -- serve ------------------------------------------------------------------------

struct ServeOptions : CommonOptions {
  unsigned short port = 8765;
  std::string bind = "0.0.0.0";
  unsigned threads = 1;
};

int cmd_serve(const ServeOptions& o) {
  namespace net = boost::asio;
  gateway::GatewayConfig gc;
  try {
    gc.base = load_config(o);
    gc.seed = o.seed.value_or(gc.base.seed);
    gc.log_dir = gateway::log_dir_from_env();
  } catch (const LivenessError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  net::io_context ioc(static_cast<int>(o.threads));
  std::shared_ptr<gateway::Gateway> gw;
  try {
    gw = std::make_shared<gateway::Gateway>(
        ioc, net::ip::tcp::endpoint(net::ip::make_address(o.bind), o.port), gc);
  } catch (const std::exception& e) {
    std::cerr << "error: cannot listen on " << o.bind << ":" << o.port << ": " << e.what() << '\n';
    return kExitInput;
  }
  gw->start();
  net::signal_set signals(ioc, SIGINT, SIGTERM);
  signals.async_wait([&](const boost::system::error_code&, int) { ioc.stop(); });
  std::cerr << "listening on ws://" << o.bind << ":" << gw->port() << " (protocol v" << wire::kProtocolVersion
            << ")";
  if (gc.log_dir) std::cerr << ", session logs in " << gc.log_dir->string();
  std::cerr << std::endl;

  std::vector<std::jthread> pool;
  for (unsigned i = 1; i < o.threads; ++i) pool.emplace_back([&] { ioc.run(); });
  ioc.run();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized head-pose liveness challenge: replay, simulate, evaluate, serve"};
  app.require_subcommand(1);

  auto add_common = [](CLI::App* sub, CommonOptions& o) {
    sub->add_option("--config", o.config_path, "JSON file with SessionConfig fields")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "session / batch seed (overrides the config file)");
  };

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "feed a trajectory file to one session");
  run_cmd->add_option("trajectory", run.trajectory, "JSON Lines landmark frames")->required();
  add_common(run_cmd, run);
  run_cmd->add_option("--out", run.out, "verdict report (JSON); '-' for stdout")->default_val("-");
  run_cmd->add_option("--events", run.events, "event log path (default: next to --out)");

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo batch over simulated agents");
  add_common(sim_cmd, sim);
  sim_cmd->add_option("--agent", sim.agents, "photo | replay | live (repeatable)")->required();
  sim_cmd->add_option("--trials", sim.trials, "trials per agent (one, or one per --agent)")->required();
  sim_cmd->add_option("--out", sim.out, "report JSON; '-' for stdout")->default_val("-");
  sim_cmd->add_option("--csv", sim.csv, "report CSV");
  sim_cmd->add_option("--record-dir", sim.record_dir, "write every trial's frame stream here");
  sim_cmd->add_option("--jitter", sim.jitter, "landmark noise sigma in px");
  sim_cmd->add_option("--latency", sim.latency, "live-user reaction latency in ms");
  sim_cmd->add_option("--gain", sim.gain, "live-user per-frame gain in (0,1]");
  sim_cmd->add_option("--threads", sim.threads, "worker threads (0 = all cores)");

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "APCER / BPCER / ACER from counts or labeled results");
  eval_cmd->add_option("--bona-fide", ev.bona_fide, "number of bona fide presentations");
  eval_cmd->add_option("--attacks", ev.attacks, "number of attack presentations");
  eval_cmd->add_option("--false-accepts", ev.false_accepts, "attacks labeled live");
  eval_cmd->add_option("--false-rejects", ev.false_rejects, "bona fide labeled attack");
  eval_cmd->add_option("--results", ev.results, "JSON Lines with {label, label_live}")->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", ev.out, "metrics JSON; '-' for stdout")->default_val("-");

  ServeOptions srv;
  auto* serve_cmd = app.add_subcommand("serve", "WebSocket gateway for live sessions");
  add_common(serve_cmd, srv);
  serve_cmd->add_option("--port", srv.port, "TCP port (0 = ephemeral)");
  serve_cmd->add_option("--bind", srv.bind, "listen address");
  serve_cmd->add_option("--threads", srv.threads, "I/O threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  if (*run_cmd) return cmd_run(run);
  if (*sim_cmd) return cmd_simulate(sim);
  if (*eval_cmd) return cmd_eval(ev);
  if (*serve_cmd) return cmd_serve(srv);
  return kExitInput;
}
