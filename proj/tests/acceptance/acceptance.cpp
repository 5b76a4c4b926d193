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

// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "liveness/batch.hpp"
#include "liveness/liveness.hpp"
#include "liveness/protocol.hpp"
#include "oracle/pose_oracle.hpp"
#include "support/generators.hpp"
#include "support/transcripts.hpp"

using namespace liveness;
using testing_support::close_rel;
using testing_support::on_grid;
using Clock = std::chrono::steady_clock;
constexpr double pi = std::numbers::pi;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

char buf[512];

template <class... A>
std::string fmt(const char* f, A... a) {
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

bool near_rim(Point2 dot, const Circle& c) {
  const double dx = dot.x - c.center.x, dy = dot.y - c.center.y;
  const double d2 = dx * dx + dy * dy, r2 = c.radius * c.radius;
  return std::abs(d2 - r2) <= 1e-6 * (1 + r2);
}

Outcome metrics_oracle() {
  const auto r = compute_metrics({105, 126, 2, 0});
  const std::string ap = percent(r.apcer), bp = percent(r.bpcer), ac = percent(r.acer), acc = percent(r.accuracy);
  const std::string d = "APCER " + ap + " BPCER " + bp + " ACER " + ac + " Acc " + acc;
  if ((ap != "1.58" && ap != "1.59") || bp != "0.00" || ac != "0.79" || acc != "99.13") return fail(d);
  return {true, d};
}

Outcome pose_oracle() {
  std::mt19937_64 g(20240101);
  std::uniform_real_distribution<double> th(pi, 2 * pi);
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    const auto f = testing_support::random_frame(g, 0.3);
    const auto p = compute_pose_state(f);
    const auto o = oracle::pose_box(f.bbox.x_min, f.bbox.y_min, f.bbox.width, f.bbox.height, f.x1, f.x2, f.y1,
                                    f.y2, f.m.x, f.m.y);
    const double theta = th(g);
    double cx = 0, cy = 0;
    oracle::circle_center(o, theta, cx, cy);
    const auto c = target_circle(p, Challenge{theta, 0.15, 0});
    const double pairs[][2] = {{p.c1.x, o.c1x}, {p.c1.y, o.c1y}, {p.c2.x, o.c2x},     {p.c2.y, o.c2y},
                               {p.a, o.a},       {p.b, o.b},       {c.center.x, cx}, {c.center.y, cy}};
    for (const auto& pr : pairs) {
      const double scale = std::max({1.0, std::abs(pr[0]), std::abs(pr[1])});
      worst = std::max(worst, std::abs(pr[0] - pr[1]) / scale);
      if (!close_rel(pr[0], pr[1], 1e-12)) return fail(fmt("frame %d: %.17g vs %.17g", i, pr[0], pr[1]));
    }
  }
  return {true, fmt("50 frames, worst rel err %.1e", worst)};
}

Outcome geometry_properties() {
  constexpr int N = 1000;
  std::mt19937_64 g(777);
  std::uniform_real_distribution<double> shift(-500, 500), th(pi, 2 * pi), sdist(0.05, 20), pdist(-500, 1500),
      coord(-2000, 2000), rad(0.1, 100);

  for (int i = 0; i < N; ++i) {
    auto f = on_grid(testing_support::random_frame(g));
    f.m = {(f.x1 + f.x2) / 2, (f.y1 + f.y2) / 2};
    const auto p = compute_pose_state(f);
    if (!(p.c2 == p.c1)) return fail(fmt("symmetry case %d: offset (%g, %g)", i, p.offset().x, p.offset().y));
  }

  int checked = 0;
  for (int i = 0; i < N; ++i) {
    const auto f = on_grid(testing_support::random_frame(g, 0.1));
    const double tx = std::round(shift(g) * 64) / 64, ty = std::round(shift(g) * 64) / 64;
    const Challenge ch{th(g), 0.15, 0};
    const auto p = compute_pose_state(f), q = compute_pose_state(testing_support::translated(f, tx, ty));
    const auto c = target_circle(p, ch), d = target_circle(q, ch);
    if (!close_rel(d.center.x, c.center.x + tx, 1e-12) || !close_rel(d.center.y, c.center.y + ty, 1e-12)) {
      return fail(fmt("translation case %d: circle moved by (%g, %g)", i, d.center.x - c.center.x,
                      d.center.y - c.center.y));
    }
    const Point2 dot{coord(g), coord(g)}, ctr{coord(g), coord(g)};
    const double r = std::hypot(dot.x - ctr.x, dot.y - ctr.y) * (0.5 + std::uniform_real_distribution<>(0, 1)(g));
    const Point2 t{tx, ty};
    if (!near_rim(dot, Circle{ctr, r}) && hit_test(dot, ctr, r) != hit_test(dot + t, ctr + t, r)) {
      return fail(fmt("hit_test translation case %d", i));
    }
    if (!near_rim(p.c2, c) && hit_test(p.c2, c) != hit_test(q.c2, d)) return fail(fmt("pipeline case %d", i));
    ++checked;
  }

  for (int i = 0; i < N; ++i) {
    const auto f = testing_support::random_frame(g, 0.1);
    const double s = sdist(g);
    const auto big = testing_support::scaled_about(f, s, pdist(g), pdist(g));
    const Challenge ch{th(g), 0.15, 0};
    const auto p = compute_pose_state(f), q = compute_pose_state(big);
    const auto c = target_circle(p, ch), d = target_circle(q, ch);
    const Point2 rel_c = c.center - p.c1, rel_d = d.center - q.c1;
    if (!close_rel(q.offset().x, s * p.offset().x, 1e-9) || !close_rel(q.offset().y, s * p.offset().y, 1e-9) ||
        !close_rel(q.a, s * p.a, 1e-9) || !close_rel(q.b, s * p.b, 1e-9) ||
        !close_rel(d.radius, s * c.radius, 1e-9) || !close_rel(rel_d.x, s * rel_c.x, 1e-9) ||
        !close_rel(rel_d.y, s * rel_c.y, 1e-9)) {
      return fail(fmt("scale case %d (s = %g)", i, s));
    }
    if (!near_rim(p.c2, c) && hit_test(p.c2, c) != hit_test(q.c2, d)) return fail(fmt("scaled hit case %d", i));
  }

  int right = 0, left = 0;
  Rng rng(99);
  for (int i = 0; right < N || left < N; ++i) {
    if (i > 100 * N) return fail("could not reach both branches");
    const auto p = compute_pose_state(testing_support::random_frame(g, 0.2));
    const double theta = sample_theta(p, rng);
    const auto c = target_circle(p, Challenge{theta, 0.15, 0});
    if (c.center.y > p.c1.y) return fail(fmt("circle below center (theta %.6f)", theta));
    if (p.c1.x >= p.c2.x) {
      ++right;
      if (!(theta > 3 * pi / 2 && theta < 2 * pi) || c.center.x < p.c1.x) return fail(fmt("right branch %.6f", theta));
    } else {
      ++left;
      if (!(theta > pi && theta < 3 * pi / 2) || c.center.x > p.c1.x) return fail(fmt("left branch %.6f", theta));
    }
  }

  std::uniform_int_distribution<int> ic(-1000, 1000), ik(1, 50);
  for (int i = 0; i < N; ++i) {
    const Point2 ctr{static_cast<double>(ic(g)), static_cast<double>(ic(g))};
    const int k = ik(g);
    const double r = 5.0 * k;
    const Point2 rim[] = {{3.0 * k, 4.0 * k}, {-4.0 * k, 3.0 * k}, {r, 0}, {0, -r}};
    for (const auto& off : rim) {
      const Point2 dot = ctr + off;
      if (!hit_test(dot, ctr, r)) return fail(fmt("rim point not a hit (case %d)", i));
      if (hit_test(ctr + Point2{off.x * (1 + 1e-9), off.y * (1 + 1e-9)}, ctr, r)) {
        return fail(fmt("point just outside rim is a hit (case %d)", i));
      }
    }
  }
  return {true, fmt("%d cases per property (%d translation, right/left branches %d/%d)", N, checked, right, left)};
}

Outcome session_determinism() {
  std::mt19937_64 g(4242);
  const AgentKind kinds[] = {AgentKind::LiveUser, AgentKind::StaticPhoto, AgentKind::Replay};
  int passed = 0;
  for (int i = 0; i < 100; ++i) {
    SessionConfig cfg;
    cfg.seed = g();
    AgentConfig ac;
    ac.kind = kinds[g() % 3];
    ac.seed = g();
    if (ac.kind == AgentKind::Replay) ac.trajectory = record_live_session(cfg, FaceModel{}, AgentConfig{}, g(), g());
    Agent agent(FaceModel{}, ac);
    const auto tr = run_trial(cfg, agent, true);
    const std::string original = serialize_events(tr.session.events);

    Session fresh(cfg);
    for (const auto& f : tr.frames) fresh.ingest_frame(f);
    if (!fresh.terminal()) fresh.abort(tr.session.events.back().t_ms);
    if (serialize_events(fresh.events()) != original) {
      return fail(fmt("pair %d (%s, seed %llu) diverged", i, std::string(to_string(ac.kind)).c_str(),
                      static_cast<unsigned long long>(cfg.seed)));
    }
    passed += tr.session.label_live;
  }
  return {true, fmt("100 pairs identical (%d passed)", passed)};
}

Outcome monte_carlo() {
  const auto t0 = Clock::now();
  BatchSpec spec;
  spec.seed = 31337;
  spec.classes = {{AgentKind::StaticPhoto, 1000}, {AgentKind::Replay, 1000}, {AgentKind::LiveUser, 200}};
  const auto rep = batch_evaluate(spec);
  const double secs = seconds_since(t0);
  if (rep.partial) return fail("batch aborted: " + rep.error);
  const auto& photo = rep.classes[0];
  const auto& replay = rep.classes[1];
  const auto& live = rep.classes[2];
  const double replay_rate = static_cast<double>(replay.passes) / replay.trials;
  const double live_rate = static_cast<double>(live.passes) / live.trials;
  const double median_s = live.median_pass_ms.value_or(1e18) / 1000.0;
  const std::string d = fmt("photo %d/1000, replay %d/1000 (%.1f%%), live %d/200 (%.1f%%), live median %.2f s, %.1f s wall",
                            photo.passes, replay.passes, 100 * replay_rate, live.passes, 100 * live_rate, median_s, secs);
  const bool ok = photo.passes == 0 && replay_rate <= 0.05 && live_rate >= 0.95 && median_s < 10.0 && secs < 120.0;
  return {ok, d};
}

Outcome throughput() {
  // Synthetic stream: a head wandering around rest. Sessions are restarted
  // whenever one reaches a verdict, so every frame goes through the full
  // update path.
  std::mt19937_64 g(5);
  std::normal_distribution<double> wander(0, 20);
  const FaceModel face{};
  std::vector<LandmarkFrame> pool;
  for (int i = 0; i < 4096; ++i) {
    auto f = face.rest_frame(0);
    f.m.x += wander(g);
    f.m.y += wander(g);
    pool.push_back(f);
  }
  constexpr std::int64_t kFrames = 2'000'000;
  SessionConfig cfg;
  std::uint64_t seed = 0;
  std::int64_t hits = 0;
  cfg.seed = seed;
  auto session = std::make_unique<Session>(cfg);
  std::int64_t t = 0;
  const auto t0 = Clock::now();
  for (std::int64_t i = 0; i < kFrames; ++i) {
    LandmarkFrame f = pool[static_cast<std::size_t>(i) & 4095];
    f.t_ms = t;
    t += 50;
    const auto u = session->ingest_frame(f);
    hits += u.state.dwell_progress;
    if (session->terminal()) {
      cfg.seed = ++seed;
      session = std::make_unique<Session>(cfg);
      t = 0;
    }
  }
  const double secs = seconds_since(t0);
  const double fps = kFrames / secs;
  return {fps >= 100000.0, fmt("%.0f frames/s (%lld frames, %llu sessions, %lld dwell)", fps,
                               static_cast<long long>(kFrames), static_cast<unsigned long long>(seed + 1),
                               static_cast<long long>(hits))};
}

Outcome protocol_conformance() {
  using namespace liveness::wire;
  int lines = 0;
  for (const char* name : {"passed", "failed_timeout", "failed_face_lost"}) {
    const auto t = testing_support::read_transcript(std::string(LIVENESS_GOLDEN_DIR) + "/" + name + ".transcript");
    for (const auto& l : t) {
      ++lines;
      if (encode(decode(l.text)) != l.text) return fail(std::string(name) + ": re-encode differs: " + l.text);
    }
    const auto v = std::get<Verdict>(decode(t.back().text));
    if ((std::string(name) == "passed") != (v.status == Status::Passed)) return fail(std::string(name) + " verdict");
  }
  auto last_error = [](const ProtocolSession::Reply& r) -> std::string {
    const Message m = decode(r.messages.back());
    const auto* e = std::get_if<Error>(&m);
    return e ? e->code : "";
  };
  const std::string hello = encode(Hello{}), start = encode(Start{});
  const std::string frame = encode(Frame{FaceModel{}.rest_frame(0), true});
  ProtocolSession a("a", SessionConfig{});
  a.handle(hello, 0);
  const std::string early = last_error(a.handle(frame, 0));
  ProtocolSession b("b", SessionConfig{});
  b.handle(hello, 0);
  b.handle(start, 0);
  const std::string twice = last_error(b.handle(start, 0));
  if (early != "not_started" || twice != "already_started") return fail("got '" + early + "' / '" + twice + "'");
  return {true, fmt("3 transcripts, %d lines byte-identical; not_started, already_started", lines)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"metrics oracle", metrics_oracle},
      {"pose-box oracle", pose_oracle},
      {"geometry properties", geometry_properties},
      {"session determinism", session_determinism},
      {"robustness monte-carlo", monte_carlo},
      {"throughput", throughput},
      {"protocol conformance", protocol_conformance},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    std::printf("%s  %-24s %s\n", o.ok ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.ok;
  }
  return failures == 0 ? 0 : 1;
}
