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

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "liveness/agents.hpp"
#include "liveness/json_io.hpp"
#include "liveness/metrics.hpp"
#include "liveness/rng.hpp"
#include "liveness/session.hpp"

// Monte-Carlo evaluation: many seeded sessions per agent class, reduced to
// confusion counts and PAD error rates.
namespace liveness {

struct ClassTrials {
  AgentKind kind = AgentKind::LiveUser;
  int trials = 0;
};

struct BatchSpec {
  SessionConfig engine;  ///< engine.seed is ignored; every trial derives its own
  FaceModel face;
  AgentConfig agent;     ///< jitter/latency/gain shared by all agents; kind, seed, trajectory ignored
  std::vector<ClassTrials> classes;
  std::uint64_t seed = 0;
  unsigned threads = 0;  ///< 0 = hardware concurrency
  bool keep_frames = false;
};

inline bool is_attack(AgentKind k) noexcept { return k != AgentKind::LiveUser; }

struct TrialOutcome {
  AgentKind kind = AgentKind::LiveUser;
  int index = 0;
  std::uint64_t session_seed = 0;
  std::uint64_t agent_seed = 0;
  Status verdict = Status::Aborted;
  bool label_live = false;
  int fits_completed = 0;
  std::optional<std::int64_t> elapsed_ms;
  std::vector<LandmarkFrame> frames;  ///< only with BatchSpec::keep_frames
};

struct ClassSummary {
  AgentKind kind = AgentKind::LiveUser;
  int trials = 0;
  int passes = 0;
  ConfusionCounts counts;
  std::optional<double> median_pass_ms;  ///< over Passed sessions only
};

struct BatchReport {
  std::uint64_t seed = 0;
  SessionConfig engine;
  AgentConfig agent;
  std::vector<ClassSummary> classes;
  ConfusionCounts total;
  std::optional<EvalReport> metrics;  ///< needs both bona fide and attack trials
  std::vector<TrialOutcome> trials;
  bool partial = false;
  std::string error;
};

struct TrialSeeds {
  std::uint64_t session = 0;
  std::uint64_t agent = 0;
  std::uint64_t source_session = 0;  ///< Replay: the recorded genuine session
  std::uint64_t source_agent = 0;
};

inline TrialSeeds trial_seeds(std::uint64_t batch_seed, AgentKind kind, int index) {
  const std::string k(to_string(kind));
  const auto i = static_cast<std::uint64_t>(index);
  return {derive_seed(batch_seed, "session/" + k, i), derive_seed(batch_seed, "agent/" + k, i),
          derive_seed(batch_seed, "source-session/" + k, i), derive_seed(batch_seed, "source-agent/" + k, i)};
}

/// Frame stream of a genuine LiveUser session, the material a replay
/// attacker would have captured.
inline std::vector<LandmarkFrame> record_live_session(const SessionConfig& engine, const FaceModel& face,
                                                      AgentConfig agent, std::uint64_t session_seed,
                                                      std::uint64_t agent_seed) {
  agent.kind = AgentKind::LiveUser;
  agent.seed = agent_seed;
  agent.trajectory.clear();
  SessionConfig cfg = engine;
  cfg.seed = session_seed;
  Agent live(face, agent);
  return run_trial(cfg, live, true).frames;
}

inline TrialOutcome run_one(const BatchSpec& spec, AgentKind kind, int index) {
  const TrialSeeds seeds = trial_seeds(spec.seed, kind, index);
  AgentConfig agent = spec.agent;
  agent.kind = kind;
  agent.seed = seeds.agent;
  agent.trajectory.clear();
  if (kind == AgentKind::Replay) {
    agent.trajectory = record_live_session(spec.engine, spec.face, spec.agent, seeds.source_session,
                                           seeds.source_agent);
  }
  SessionConfig cfg = spec.engine;
  cfg.seed = seeds.session;
  Agent a(spec.face, std::move(agent));
  TrialResult tr = run_trial(cfg, a, spec.keep_frames);

  TrialOutcome out;
  out.kind = kind;
  out.index = index;
  out.session_seed = seeds.session;
  out.agent_seed = seeds.agent;
  out.verdict = tr.session.verdict;
  out.label_live = tr.session.label_live;
  out.fits_completed = tr.session.fits_completed;
  out.elapsed_ms = tr.session.elapsed_ms;
  out.frames = std::move(tr.frames);
  return out;
}

namespace detail {
inline std::optional<double> median(std::vector<std::int64_t> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? static_cast<double>(v[n / 2]) : (static_cast<double>(v[n / 2 - 1]) + v[n / 2]) / 2.0;
}
}  // namespace detail

/**
 * Runs every (class, trial) pair with seeds derived from spec.seed, in
 * parallel. Outcomes land in per-trial slots and are reduced in a fixed
 * order, so the report does not depend on the thread count.
 *
 * A throwing trial stops the batch; the report then holds the trials that
 * completed, partial = true and the error message.
 */
inline BatchReport batch_evaluate(const BatchSpec& spec) {
  validate(spec.engine);
  if (spec.classes.empty()) throw ValidationError("no agent classes requested");
  for (const auto& c : spec.classes) {
    if (c.trials < 1) throw ValidationError("trials must be >= 1");
  }

  struct Job {
    AgentKind kind;
    int index;
  };
  std::vector<Job> jobs;
  for (const auto& c : spec.classes) {
    for (int i = 0; i < c.trials; ++i) jobs.push_back({c.kind, i});
  }

  std::vector<std::optional<TrialOutcome>> slots(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mu;
  std::string error;

  auto worker = [&] {
    for (;;) {
      if (failed.load(std::memory_order_relaxed)) return;
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      try {
        slots[j] = run_one(spec, jobs[j].kind, jobs[j].index);
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mu);
        if (!failed.exchange(true)) error = e.what();
        return;
      }
    }
  };

  unsigned n = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  n = static_cast<unsigned>(std::min<std::size_t>(n, jobs.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }

  BatchReport rep;
  rep.seed = spec.seed;
  rep.engine = spec.engine;
  rep.agent = spec.agent;
  rep.agent.trajectory.clear();
  rep.partial = failed.load();
  rep.error = error;

  std::vector<std::vector<std::int64_t>> pass_times(spec.classes.size());
  for (std::size_t ci = 0; ci < spec.classes.size(); ++ci) {
    ClassSummary s;
    s.kind = spec.classes[ci].kind;
    rep.classes.push_back(s);
  }
  std::size_t j = 0;
  for (std::size_t ci = 0; ci < spec.classes.size(); ++ci) {
    ClassSummary& s = rep.classes[ci];
    for (int i = 0; i < spec.classes[ci].trials; ++i, ++j) {
      if (!slots[j]) continue;
      TrialOutcome& o = *slots[j];
      ++s.trials;
      if (o.label_live) {
        ++s.passes;
        if (o.elapsed_ms) pass_times[ci].push_back(*o.elapsed_ms);
      }
      if (is_attack(o.kind)) {
        ++s.counts.attack_total;
        if (o.label_live) ++s.counts.false_accepts;
      } else {
        ++s.counts.bona_fide_total;
        if (!o.label_live) ++s.counts.false_rejects;
      }
      rep.trials.push_back(std::move(o));
    }
    s.median_pass_ms = detail::median(pass_times[ci]);
    rep.total += s.counts;
  }
  if (rep.total.bona_fide_total > 0 && rep.total.attack_total > 0) rep.metrics = compute_metrics(rep.total);
  return rep;
}

// -- Report rendering ------------------------------------------------------------

inline Json counts_json(const ConfusionCounts& c) {
  return Json{{"bona_fide_total", c.bona_fide_total},
              {"attack_total", c.attack_total},
              {"false_accepts", c.false_accepts},
              {"false_rejects", c.false_rejects}};
}

inline Json metrics_json(const EvalReport& r) {
  Json j = counts_json(r.counts);
  j["apcer"] = r.apcer;
  j["bpcer"] = r.bpcer;
  j["acer"] = r.acer;
  j["accuracy"] = r.accuracy;
  j["far"] = r.far();
  j["frr"] = r.frr();
  j["hter"] = r.hter();
  j["display_percent"] = Json{{"apcer", percent(r.apcer)},
                              {"bpcer", percent(r.bpcer)},
                              {"acer", percent(r.acer)},
                              {"accuracy", percent(r.accuracy)}};
  return j;
}

inline Json report_json(const BatchReport& rep) {
  Json j = Json::object();
  j["seed"] = rep.seed;
  Json engine = to_json(rep.engine);
  engine.erase("seed");
  j["engine"] = engine;
  j["agent"] = Json{{"jitter_px", rep.agent.jitter_px},
                    {"reaction_latency_ms", rep.agent.reaction_latency_ms},
                    {"gain", rep.agent.gain}};
  Json classes = Json::array();
  for (const auto& c : rep.classes) {
    Json cj = Json::object();
    cj["class"] = std::string(to_string(c.kind));
    cj["label"] = is_attack(c.kind) ? "attack" : "bona_fide";
    cj["trials"] = c.trials;
    cj["passes"] = c.passes;
    cj["counts"] = counts_json(c.counts);
    if (c.counts.attack_total > 0) cj["apcer"] = apcer_of(c.counts);
    if (c.counts.bona_fide_total > 0) cj["bpcer"] = bpcer_of(c.counts);
    cj["median_pass_ms"] = c.median_pass_ms ? Json(*c.median_pass_ms) : Json(nullptr);
    classes.push_back(std::move(cj));
  }
  j["classes"] = std::move(classes);
  j["total"] = counts_json(rep.total);
  j["metrics"] = rep.metrics ? metrics_json(*rep.metrics) : Json(nullptr);
  j["partial"] = rep.partial;
  if (rep.partial) j["error"] = rep.error;
  Json trials = Json::array();
  for (const auto& t : rep.trials) {
    trials.push_back(Json{{"class", std::string(to_string(t.kind))},
                          {"index", t.index},
                          {"session_seed", t.session_seed},
                          {"agent_seed", t.agent_seed},
                          {"verdict", std::string(to_string(t.verdict))},
                          {"label_live", t.label_live},
                          {"fits_completed", t.fits_completed},
                          {"elapsed_ms", t.elapsed_ms ? Json(*t.elapsed_ms) : Json(nullptr)}});
  }
  j["trials"] = std::move(trials);
  return j;
}

/// One row per class plus a "total" row. Percent columns are blank where a
/// rate is undefined.
inline std::string report_csv(const BatchReport& rep) {
  std::ostringstream out;
  out << "class,label,trials,passes,bona_fide_total,attack_total,false_accepts,false_rejects,"
         "apcer_pct,bpcer_pct,acer_pct,accuracy_pct\n";
  auto row = [&](const std::string& name, const std::string& label, int trials, int passes,
                 const ConfusionCounts& c) {
    out << name << ',' << label << ',' << trials << ',' << passes << ',' << c.bona_fide_total << ','
        << c.attack_total << ',' << c.false_accepts << ',' << c.false_rejects << ',';
    const bool has_a = c.attack_total > 0;
    const bool has_b = c.bona_fide_total > 0;
    out << (has_a ? percent(apcer_of(c)) : "") << ',' << (has_b ? percent(bpcer_of(c)) : "") << ',';
    if (has_a && has_b) {
      const EvalReport r = compute_metrics(c);
      out << percent(r.acer) << ',' << percent(r.accuracy);
    } else {
      const double acc = c.total() ? static_cast<double>(c.total() - c.errors()) / c.total() : 0.0;
      out << ',' << (c.total() ? percent(acc) : "");
    }
    out << '\n';
  };
  int trials = 0, passes = 0;
  for (const auto& c : rep.classes) {
    row(std::string(to_string(c.kind)), is_attack(c.kind) ? "attack" : "bona_fide", c.trials, c.passes, c.counts);
    trials += c.trials;
    passes += c.passes;
  }
  row("total", "all", trials, passes, rep.total);
  return out.str();
}

}  // namespace liveness
