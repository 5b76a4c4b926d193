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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "liveness/errors.hpp"
#include "liveness/geometry.hpp"
#include "liveness/rng.hpp"

namespace liveness {

enum class Status { AwaitingFace, Active, Passed, FailedTimeout, FailedFaceLost, Aborted };

constexpr std::string_view to_string(Status s) noexcept {
  switch (s) {
    case Status::AwaitingFace: return "AwaitingFace";
    case Status::Active: return "Active";
    case Status::Passed: return "Passed";
    case Status::FailedTimeout: return "FailedTimeout";
    case Status::FailedFaceLost: return "FailedFaceLost";
    case Status::Aborted: return "Aborted";
  }
  return "?";
}

inline std::optional<Status> status_from_string(std::string_view s) noexcept {
  for (Status st : {Status::AwaitingFace, Status::Active, Status::Passed, Status::FailedTimeout,
                    Status::FailedFaceLost, Status::Aborted}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

constexpr bool is_terminal(Status s) noexcept {
  return s != Status::AwaitingFace && s != Status::Active;
}

struct SessionConfig {
  std::int64_t timeout_ms = 15000;
  int required_fits = 3;
  int dwell_frames = 3;
  double r_ratio = 0.15;
  std::int64_t max_face_lost_ms = 2000;
  std::uint64_t seed = 0;

  friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

inline void validate(const SessionConfig& c) {
  if (c.timeout_ms <= 0) throw ValidationError("timeout_ms must be > 0");
  if (c.required_fits < 1) throw ValidationError("required_fits must be >= 1");
  if (c.dwell_frames < 1) throw ValidationError("dwell_frames must be >= 1");
  if (!(c.r_ratio > 0.0 && c.r_ratio <= 1.0)) throw ValidationError("r_ratio must be in (0, 1]");
  if (c.max_face_lost_ms < 0) throw ValidationError("max_face_lost_ms must be >= 0");
}

struct SessionState {
  Status status = Status::AwaitingFace;
  int fits_completed = 0;
  int dwell_progress = 0;
  std::optional<Challenge> challenge;
  std::optional<std::int64_t> started_at_ms;
  std::int64_t last_face_ms = 0;
};

namespace event {
struct SessionStarted {
  SessionConfig config;
};
struct ChallengeIssued {
  int index = 0;
  double theta = 0.0;
};
struct FrameProcessed {
  Point2 dot;
  Circle circle;
  bool hit = false;
  int dwell = 0;
};
struct FitCompleted {
  int n = 0;
};
struct Verdict {
  Status status = Status::Aborted;
};
}  // namespace event

struct SessionEvent {
  std::int64_t t_ms = 0;
  std::variant<event::SessionStarted, event::ChallengeIssued, event::FrameProcessed,
               event::FitCompleted, event::Verdict>
      payload;
};

constexpr std::string_view kind_name(const SessionEvent& e) noexcept {
  constexpr std::string_view names[] = {"SessionStarted", "ChallengeIssued", "FrameProcessed",
                                        "FitCompleted", "Verdict"};
  return names[e.payload.index()];
}

/// What the presenter needs after each observation.
struct SessionUpdate {
  std::optional<Point2> dot;
  std::optional<Circle> circle;
  SessionState state;
  std::int64_t remaining_ms = 0;
};

struct SessionResult {
  Status verdict = Status::Aborted;
  bool label_live = false;
  int fits_completed = 0;
  /// Verdict time minus start; absent if the face never appeared.
  std::optional<std::int64_t> elapsed_ms;
  std::vector<SessionEvent> events;
};

/**
 * The liveness state machine.
 *
 * The first valid frame starts one timeout window shared by all fits. Each
 * frame re-anchors the current challenge circle to the face and hit-tests
 * the dot (c2); dwell_frames consecutive hits complete a fit, and every fit
 * but the last issues a fresh challenge from the pose at that frame.
 * Session time is frame t_ms, never the wall clock.
 *
 * Calls must be serialized per instance.
 */
class Session {
 public:
  explicit Session(const SessionConfig& config) : config_(config), rng_(config.seed) {
    validate(config_);
    events_.reserve(512);
  }

  const SessionConfig& config() const noexcept { return config_; }
  const SessionState& state() const noexcept { return state_; }
  const std::vector<SessionEvent>& events() const noexcept { return events_; }
  bool terminal() const noexcept { return is_terminal(state_.status); }

  /// An invalid frame (see frame_violation) is treated as "no face" at t_ms.
  SessionUpdate ingest_frame(const LandmarkFrame& frame) {
    observe(frame.t_ms);
    const bool face = is_valid(frame);
    const std::int64_t t = frame.t_ms;

    if (state_.status == Status::AwaitingFace) {
      if (!face) return make_update(t, std::nullopt, std::nullopt);
      state_.status = Status::Active;
      state_.started_at_ms = t;
      state_.last_face_ms = t;
      emit(t, event::SessionStarted{config_});
      const PoseState pose = compute_pose_state_unchecked(frame);
      issue_challenge(t, pose);
      return process(t, pose);
    }

    if (check_deadlines(t)) return make_update(t, std::nullopt, std::nullopt);
    if (!face) {
      state_.dwell_progress = 0;
      return make_update(t, std::nullopt, std::nullopt);
    }
    state_.last_face_ms = t;
    return process(t, compute_pose_state_unchecked(frame));
  }

  /// Time passes with no face observed.
  SessionUpdate advance(std::int64_t t_ms) {
    observe(t_ms);
    if (state_.status == Status::Active && !check_deadlines(t_ms)) state_.dwell_progress = 0;
    return make_update(t_ms, std::nullopt, std::nullopt);
  }

  void abort(std::int64_t t_ms) {
    if (terminal()) throw SessionMisuse("session already finished");
    if (t_ms < last_t_ms_) t_ms = last_t_ms_;
    last_t_ms_ = t_ms;
    finish(t_ms, Status::Aborted);
  }

  std::int64_t remaining_ms(std::int64_t t_ms) const noexcept {
    if (!state_.started_at_ms) return config_.timeout_ms;
    const std::int64_t left = config_.timeout_ms - (t_ms - *state_.started_at_ms);
    return left < 0 ? 0 : left;
  }

  SessionResult result() const {
    if (!terminal()) throw SessionMisuse("session has no verdict yet");
    SessionResult r;
    r.verdict = state_.status;
    r.label_live = state_.status == Status::Passed;
    r.fits_completed = state_.fits_completed;
    if (state_.started_at_ms) r.elapsed_ms = events_.back().t_ms - *state_.started_at_ms;
    r.events = events_;
    return r;
  }

 private:
  void observe(std::int64_t t_ms) {
    if (terminal()) throw SessionMisuse("session already finished: " + std::string(to_string(state_.status)));
    if (t_ms < last_t_ms_) {
      throw OutOfOrderFrame("t_ms " + std::to_string(t_ms) + " precedes " + std::to_string(last_t_ms_));
    }
    last_t_ms_ = t_ms;
  }

  void emit(std::int64_t t, decltype(SessionEvent::payload) payload) {
    events_.push_back(SessionEvent{t, std::move(payload)});
  }

  void finish(std::int64_t t, Status s) {
    state_.status = s;
    state_.dwell_progress = 0;
    emit(t, event::Verdict{s});
  }

  /// Whichever deadline passed first decides the failure; ties go to timeout.
  bool check_deadlines(std::int64_t t) {
    const std::int64_t timeout_at = *state_.started_at_ms + config_.timeout_ms;
    const std::int64_t face_at = state_.last_face_ms + config_.max_face_lost_ms;
    const bool timed_out = t > timeout_at;
    const bool face_lost = t > face_at;
    if (!timed_out && !face_lost) return false;
    if (timed_out && (!face_lost || timeout_at <= face_at)) {
      finish(t, Status::FailedTimeout);
    } else {
      finish(t, Status::FailedFaceLost);
    }
    return true;
  }

  void issue_challenge(std::int64_t t, const PoseState& pose) {
    Challenge ch;
    ch.theta = sample_theta(pose, rng_);
    ch.r_ratio = config_.r_ratio;
    ch.created_at_ms = t;
    state_.challenge = ch;
    emit(t, event::ChallengeIssued{++challenges_issued_, ch.theta});
  }

  SessionUpdate process(std::int64_t t, const PoseState& pose) {
    const Circle circle = target_circle(pose, *state_.challenge);
    const bool hit = hit_test(pose.c2, circle);
    state_.dwell_progress = hit ? state_.dwell_progress + 1 : 0;
    emit(t, event::FrameProcessed{pose.c2, circle, hit, state_.dwell_progress});

    if (state_.dwell_progress < config_.dwell_frames) return make_update(t, pose.c2, circle);

    state_.dwell_progress = 0;
    ++state_.fits_completed;
    emit(t, event::FitCompleted{state_.fits_completed});
    if (state_.fits_completed == config_.required_fits) {
      finish(t, Status::Passed);
      return make_update(t, pose.c2, circle);
    }
    issue_challenge(t, pose);
    return make_update(t, pose.c2, target_circle(pose, *state_.challenge));
  }

  SessionUpdate make_update(std::int64_t t, std::optional<Point2> dot, std::optional<Circle> circle) const {
    return SessionUpdate{dot, circle, state_, remaining_ms(t)};
  }

  SessionConfig config_;
  Rng rng_;
  SessionState state_;
  std::vector<SessionEvent> events_;
  std::int64_t last_t_ms_ = 0;
  int challenges_issued_ = 0;
};

inline Session start_session(const SessionConfig& config) { return Session(config); }

}  // namespace liveness
