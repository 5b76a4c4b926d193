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

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string_view>
#include <vector>

#include "liveness/errors.hpp"
#include "liveness/geometry.hpp"
#include "liveness/rng.hpp"
#include "liveness/session.hpp"

// Synthetic landmark streams standing in for live users and 2D attackers.
namespace liveness {

/// Rigid face outline plus the nose's rest position.
struct FaceModel {
  BBox bbox{220.0, 110.0, 200.0, 260.0};
  double x1 = 220.0;
  double x2 = 420.0;
  double y1 = 110.0;
  double y2 = 370.0;
  Point2 nose_rest{320.0, 240.0};
  std::int64_t frame_interval_ms = 50;

  LandmarkFrame frame_at(std::int64_t t_ms, Point2 nose) const {
    return LandmarkFrame{t_ms, bbox, x1, x2, y1, y2, nose};
  }
  LandmarkFrame rest_frame(std::int64_t t_ms) const { return frame_at(t_ms, nose_rest); }
};

/// Face model scaled by `s` about the origin; used for low-resolution runs.
inline FaceModel scaled(const FaceModel& f, double s) {
  FaceModel out = f;
  out.bbox = {f.bbox.x_min * s, f.bbox.y_min * s, f.bbox.width * s, f.bbox.height * s};
  out.x1 = f.x1 * s;
  out.x2 = f.x2 * s;
  out.y1 = f.y1 * s;
  out.y2 = f.y2 * s;
  out.nose_rest = {f.nose_rest.x * s, f.nose_rest.y * s};
  return out;
}

enum class AgentKind { StaticPhoto, Replay, LiveUser };

constexpr std::string_view to_string(AgentKind k) noexcept {
  switch (k) {
    case AgentKind::StaticPhoto: return "StaticPhoto";
    case AgentKind::Replay: return "Replay";
    case AgentKind::LiveUser: return "LiveUser";
  }
  return "?";
}

/// Accepts the CLI spellings (photo/replay/live) and the type names.
inline std::optional<AgentKind> agent_kind_from_string(std::string_view s) noexcept {
  if (s == "photo" || s == "StaticPhoto") return AgentKind::StaticPhoto;
  if (s == "replay" || s == "Replay") return AgentKind::Replay;
  if (s == "live" || s == "LiveUser") return AgentKind::LiveUser;
  return std::nullopt;
}

struct AgentConfig {
  AgentKind kind = AgentKind::LiveUser;
  double jitter_px = 0.5;
  std::int64_t reaction_latency_ms = 300;
  double gain = 0.35;
  std::vector<LandmarkFrame> trajectory;  // Replay only
  std::uint64_t seed = 0;
};

inline void validate(const AgentConfig& c) {
  if (!(c.jitter_px >= 0.0) || !std::isfinite(c.jitter_px)) throw ValidationError("jitter_px must be >= 0");
  if (c.kind == AgentKind::LiveUser) {
    if (c.reaction_latency_ms < 0) throw ValidationError("reaction_latency_ms must be >= 0");
    if (!(c.gain > 0.0 && c.gain <= 1.0)) throw ValidationError("gain must be in (0, 1]");
  }
  if (c.kind == AgentKind::Replay && c.trajectory.empty()) {
    throw ValidationError("replay agent needs a non-empty trajectory");
  }
}

/// Grid the photo jitter snaps to. Translations by multiples of this are
/// exact in binary floating point for coordinates on the same grid, which
/// keeps a photo's pose offset bit-identical under jitter.
inline constexpr double kJitterQuantum = 1.0 / 1024.0;

/**
 * One simulated subject. Call step() once per frame interval, passing the
 * session's reply to the previous frame.
 *
 *  - StaticPhoto: the rest frame moved rigidly by Gaussian jitter.
 *  - Replay: the recorded trajectory, blind to the session.
 *  - LiveUser: steers its nose toward the circle it saw reaction_latency_ms
 *    ago with first-order dynamics.
 */
class Agent {
 public:
  Agent(FaceModel face, AgentConfig config, std::int64_t start_ms = 0)
      : face_(std::move(face)), config_(std::move(config)), rng_(config_.seed),
        nose_(face_.nose_rest), start_ms_(start_ms) {
    validate(config_);
    if (!is_valid(face_.rest_frame(start_ms_))) throw ValidationError("face model violates frame invariants");
  }

  const FaceModel& face() const noexcept { return face_; }
  const AgentConfig& config() const noexcept { return config_; }
  std::size_t frames_emitted() const noexcept { return index_; }

  LandmarkFrame step() { return emit(); }

  LandmarkFrame step(const SessionUpdate& observation) {
    if (config_.kind == AgentKind::LiveUser && index_ > 0) {
      seen_.push_back({last_t_, observation.circle});
    }
    return emit();
  }

 private:
  struct Seen {
    std::int64_t t_ms;
    std::optional<Circle> circle;
  };

  std::int64_t time_of(std::size_t i) const {
    return start_ms_ + static_cast<std::int64_t>(i) * face_.frame_interval_ms;
  }

  LandmarkFrame emit() {
    LandmarkFrame f;
    switch (config_.kind) {
      case AgentKind::StaticPhoto: f = photo_frame(); break;
      case AgentKind::Replay: f = replay_frame(); break;
      case AgentKind::LiveUser: f = live_frame(); break;
    }
    last_t_ = f.t_ms;
    ++index_;
    return f;
  }

  double quantized_jitter() {
    if (config_.jitter_px == 0.0) return 0.0;
    return std::round(rng_.gaussian(0.0, config_.jitter_px) / kJitterQuantum) * kJitterQuantum;
  }

  LandmarkFrame photo_frame() {
    const double dx = quantized_jitter();
    const double dy = quantized_jitter();
    LandmarkFrame f = face_.rest_frame(time_of(index_));
    f.bbox.x_min += dx;
    f.bbox.y_min += dy;
    f.x1 += dx;
    f.x2 += dx;
    f.y1 += dy;
    f.y2 += dy;
    f.m.x += dx;
    f.m.y += dy;
    return f;
  }

  LandmarkFrame replay_frame() const {
    const auto& tr = config_.trajectory;
    if (index_ < tr.size()) return tr[index_];
    LandmarkFrame f = tr.back();
    f.t_ms += static_cast<std::int64_t>(index_ - tr.size() + 1) * face_.frame_interval_ms;
    return f;
  }

  LandmarkFrame live_frame() {
    const std::int64_t t = time_of(index_);
    const std::int64_t visible_until = t - config_.reaction_latency_ms;
    while (seen_.size() > 1 && seen_[1].t_ms <= visible_until) seen_.pop_front();

    LandmarkFrame f = face_.frame_at(t, nose_);
    if (index_ > 0) {
      Point2 target = face_.nose_rest;
      if (!seen_.empty() && seen_.front().t_ms <= visible_until && seen_.front().circle) {
        target = nose_for_offset(f, seen_.front().circle->center - f.bbox.center());
      }
      nose_.x += config_.gain * (target.x - nose_.x);
      nose_.y += config_.gain * (target.y - nose_.y);
      if (config_.jitter_px > 0.0) {
        nose_.x += rng_.gaussian(0.0, config_.jitter_px);
        nose_.y += rng_.gaussian(0.0, config_.jitter_px);
      }
      f.m = nose_;
    }
    return f;
  }

  FaceModel face_;
  AgentConfig config_;
  Rng rng_;
  Point2 nose_;
  std::int64_t start_ms_;
  std::int64_t last_t_ = 0;
  std::size_t index_ = 0;
  std::deque<Seen> seen_;
};

struct TrialResult {
  SessionResult session;
  std::vector<LandmarkFrame> frames;
};

/// Runs one session against one agent until a verdict. If nothing decides
/// the session by `horizon_ms` (e.g. no valid face ever appears) it is aborted.
inline TrialResult run_trial(const SessionConfig& session_config, Agent& agent,
                             bool record_frames = false, std::int64_t horizon_ms = -1) {
  if (horizon_ms < 0) horizon_ms = session_config.timeout_ms + session_config.max_face_lost_ms + 1000;
  Session session(session_config);
  TrialResult out;
  std::optional<SessionUpdate> last;
  while (!session.terminal()) {
    LandmarkFrame f = last ? agent.step(*last) : agent.step();
    if (f.t_ms > horizon_ms) {
      session.abort(f.t_ms);
      break;
    }
    if (record_frames) out.frames.push_back(f);
    last = session.ingest_frame(f);
  }
  out.session = session.result();
  return out;
}

}  // namespace liveness
