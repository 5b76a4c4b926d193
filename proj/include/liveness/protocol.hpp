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
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "liveness/json_io.hpp"
#include "liveness/session.hpp"

/**
 * Live-session wire protocol, version 1.
 *
 * Every message is one JSON object with a "type" field, sent as a WebSocket
 * text frame. Client: hello, start, frame, abort. Server: ready, update,
 * verdict, error. All encoders emit a fixed field order so a decoded
 * message re-encodes to the same bytes.
 */
namespace liveness::wire {

inline constexpr int kProtocolVersion = 1;

namespace code {
inline constexpr std::string_view bad_json = "bad_json";
inline constexpr std::string_view bad_message = "bad_message";
inline constexpr std::string_view unsupported_version = "unsupported_version";
inline constexpr std::string_view hello_required = "hello_required";
inline constexpr std::string_view not_started = "not_started";
inline constexpr std::string_view already_started = "already_started";
inline constexpr std::string_view bad_config = "bad_config";
inline constexpr std::string_view out_of_order = "out_of_order";
inline constexpr std::string_view session_over = "session_over";
}  // namespace code

struct Hello {
  int protocol_version = kProtocolVersion;
};
struct Start {
  Json config = Json::object();  ///< SessionConfig overrides
};
struct Frame {
  LandmarkFrame frame;
  bool has_time = true;
};
struct Abort {};

struct Ready {
  std::string session_id;
  int protocol_version = kProtocolVersion;
};
struct Update {
  std::optional<Point2> dot;
  std::optional<Circle> circle;
  int fits_completed = 0;
  int dwell_progress = 0;
  std::int64_t remaining_ms = 0;
  Status status = Status::AwaitingFace;
};
struct Verdict {
  Status status = Status::Aborted;
  bool label_live = false;
};
struct Error {
  std::string code;
  std::string message;
};

using Message = std::variant<Hello, Start, Frame, Abort, Ready, Update, Verdict, Error>;

inline bool is_client_message(const Message& m) noexcept { return m.index() < 4; }

/// Thrown by decode(); `code` is bad_json or bad_message.
class DecodeError : public ParseError {
 public:
  DecodeError(std::string_view c, const std::string& what) : ParseError(what), code(c) {}
  std::string_view code;
};

inline std::string encode(const Message& msg) {
  Json j = Json::object();
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Hello>) {
          j["type"] = "hello";
          j["protocol_version"] = m.protocol_version;
        } else if constexpr (std::is_same_v<T, Start>) {
          j["type"] = "start";
          j["config"] = m.config;
        } else if constexpr (std::is_same_v<T, Frame>) {
          j["type"] = "frame";
          append_frame_fields(j, m.frame, m.has_time);
        } else if constexpr (std::is_same_v<T, Abort>) {
          j["type"] = "abort";
        } else if constexpr (std::is_same_v<T, Ready>) {
          j["type"] = "ready";
          j["session_id"] = m.session_id;
          j["protocol_version"] = m.protocol_version;
        } else if constexpr (std::is_same_v<T, Update>) {
          j["type"] = "update";
          j["dot"] = m.dot ? to_json(*m.dot) : Json(nullptr);
          j["circle"] = m.circle ? to_json(*m.circle) : Json(nullptr);
          j["fits_completed"] = m.fits_completed;
          j["dwell_progress"] = m.dwell_progress;
          j["remaining_ms"] = m.remaining_ms;
          j["status"] = std::string(to_string(m.status));
        } else if constexpr (std::is_same_v<T, Verdict>) {
          j["type"] = "verdict";
          j["status"] = std::string(to_string(m.status));
          j["label_live"] = m.label_live;
        } else {
          j["type"] = "error";
          j["code"] = m.code;
          j["message"] = m.message;
        }
      },
      msg);
  return j.dump();
}

namespace detail {

inline Status status_field(const Json& j) {
  const Json& v = liveness::detail::require(j, "status");
  if (!v.is_string()) throw ParseError("'status' must be a string");
  auto s = status_from_string(v.get<std::string>());
  if (!s) throw ParseError("unknown status '" + v.get<std::string>() + "'");
  return *s;
}

inline std::string string_field(const Json& j, const char* key) {
  const Json& v = liveness::detail::require(j, key);
  if (!v.is_string()) throw ParseError(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

inline Message decode_object(const Json& j) {
  namespace d = liveness::detail;
  if (!j.is_object()) throw ParseError("message must be a JSON object");
  const std::string type = string_field(j, "type");
  if (type == "hello") return Hello{static_cast<int>(d::require_integer(j, "protocol_version"))};
  if (type == "start") {
    Start s;
    if (auto it = j.find("config"); it != j.end()) {
      if (!it->is_object()) throw ParseError("'config' must be an object");
      s.config = *it;
    }
    return s;
  }
  if (type == "frame") {
    Frame f;
    f.frame = frame_from_json(j, false, &f.has_time);
    return f;
  }
  if (type == "abort") return Abort{};
  if (type == "ready") {
    return Ready{string_field(j, "session_id"), static_cast<int>(d::require_integer(j, "protocol_version"))};
  }
  if (type == "update") {
    Update u;
    const Json& dot = d::require(j, "dot");
    if (!dot.is_null()) u.dot = d::point_from_json(j, "dot");
    const Json& circle = d::require(j, "circle");
    if (!circle.is_null()) {
      if (!circle.is_object()) throw ParseError("'circle' must be an object or null");
      u.circle = Circle{{d::require_number(circle, "x"), d::require_number(circle, "y")},
                        d::require_number(circle, "r")};
    }
    u.fits_completed = static_cast<int>(d::require_integer(j, "fits_completed"));
    u.dwell_progress = static_cast<int>(d::require_integer(j, "dwell_progress"));
    u.remaining_ms = d::require_integer(j, "remaining_ms");
    u.status = status_field(j);
    return u;
  }
  if (type == "verdict") {
    const Json& live = d::require(j, "label_live");
    if (!live.is_boolean()) throw ParseError("'label_live' must be a boolean");
    return Verdict{status_field(j), live.get<bool>()};
  }
  if (type == "error") return Error{string_field(j, "code"), string_field(j, "message")};
  throw ParseError("unknown message type '" + type + "'");
}

}  // namespace detail

inline Message decode(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw DecodeError(code::bad_json, e.what());
  }
  try {
    return detail::decode_object(j);
  } catch (const ParseError& e) {
    throw DecodeError(code::bad_message, e.what());
  } catch (const Json::exception& e) {
    throw DecodeError(code::bad_message, e.what());
  }
}

inline Update make_update(const SessionUpdate& u) {
  return Update{u.dot, u.circle, u.state.fits_completed, u.state.dwell_progress, u.remaining_ms,
                u.state.status};
}

/**
 * Server side of one connection: hello -> ready, start -> update, then one
 * update per frame until the verdict. Protocol violations answer with an
 * error and close; a running session is then recorded as Aborted.
 *
 * Frames without t_ms are stamped with wall-clock milliseconds since start.
 * Not thread-safe; the transport serializes calls per connection.
 */
class ProtocolSession {
 public:
  struct Reply {
    std::vector<std::string> messages;
    bool close = false;
  };

  ProtocolSession(std::string session_id, SessionConfig base_config)
      : id_(std::move(session_id)), base_(base_config) {}

  const std::string& session_id() const noexcept { return id_; }
  bool closed() const noexcept { return phase_ == Phase::Closed; }
  /// Present once "start" has been accepted.
  const Session* session() const noexcept { return session_ ? &*session_ : nullptr; }

  Reply handle(std::string_view text, std::int64_t wall_ms) {
    Reply r;
    if (phase_ == Phase::Closed) return fail(r, code::session_over, "session is closed", wall_ms);
    Message msg;
    try {
      msg = decode(text);
    } catch (const DecodeError& e) {
      return fail(r, e.code, e.what(), wall_ms);
    }
    if (!is_client_message(msg)) return fail(r, code::bad_message, "server-only message type", wall_ms);

    switch (phase_) {
      case Phase::AwaitHello: {
        const Hello* h = std::get_if<Hello>(&msg);
        if (!h) return fail(r, code::hello_required, "expected hello", wall_ms);
        if (h->protocol_version != kProtocolVersion) {
          return fail(r, code::unsupported_version,
                      "protocol_version " + std::to_string(h->protocol_version) + " not supported", wall_ms);
        }
        phase_ = Phase::AwaitStart;
        r.messages.push_back(encode(Ready{id_, kProtocolVersion}));
        return r;
      }
      case Phase::AwaitStart:
        if (auto* s = std::get_if<Start>(&msg)) return start(r, *s, wall_ms);
        if (std::holds_alternative<Frame>(msg)) return fail(r, code::not_started, "frame before start", wall_ms);
        if (std::holds_alternative<Abort>(msg)) {
          r.messages.push_back(encode(Verdict{Status::Aborted, false}));
          return close(r);
        }
        return fail(r, code::bad_message, "unexpected hello", wall_ms);
      case Phase::Running:
        if (auto* f = std::get_if<Frame>(&msg)) return frame(r, *f, wall_ms);
        if (std::holds_alternative<Start>(msg)) return fail(r, code::already_started, "session already started", wall_ms);
        if (std::holds_alternative<Abort>(msg)) {
          session_->abort(session_time(wall_ms));
          r.messages.push_back(encode(Verdict{Status::Aborted, false}));
          return close(r);
        }
        return fail(r, code::bad_message, "unexpected hello", wall_ms);
      case Phase::Closed: break;
    }
    return r;
  }

  /// Transport went away: a running session is recorded as Aborted.
  void abandon(std::int64_t wall_ms) {
    if (session_ && !session_->terminal()) session_->abort(session_time(wall_ms));
    phase_ = Phase::Closed;
  }

  /// Lets time pass without client traffic so a silent client still fails
  /// with FailedFaceLost or FailedTimeout.
  Reply tick(std::int64_t wall_ms) {
    Reply r;
    if (phase_ != Phase::Running || session_->terminal()) return r;
    const std::int64_t t = std::max(session_time(wall_ms), last_t_);
    const SessionUpdate u = session_->advance(t);
    last_t_ = t;
    last_wall_ = wall_ms;
    if (session_->terminal()) {
      r.messages.push_back(encode(make_update(u)));
      return finish(r);
    }
    return r;
  }

 private:
  enum class Phase { AwaitHello, AwaitStart, Running, Closed };

  Reply& close(Reply& r) {
    phase_ = Phase::Closed;
    r.close = true;
    return r;
  }

  Reply& fail(Reply& r, std::string_view c, const std::string& message, std::int64_t wall_ms) {
    if (session_ && !session_->terminal()) session_->abort(session_time(wall_ms));
    r.messages.push_back(encode(Error{std::string(c), message}));
    return close(r);
  }

  Reply& finish(Reply& r) {
    const SessionResult res = session_->result();
    r.messages.push_back(encode(Verdict{res.verdict, res.label_live}));
    return close(r);
  }

  /// Client-stamped frames keep their timeline; between frames the session
  /// clock advances with the wall clock.
  std::int64_t session_time(std::int64_t wall_ms) const {
    return last_t_ + std::max<std::int64_t>(0, wall_ms - last_wall_);
  }

  Reply& start(Reply& r, const Start& s, std::int64_t wall_ms) {
    SessionConfig cfg;
    try {
      cfg = apply_config_overrides(base_, s.config);
    } catch (const LivenessError& e) {
      return fail(r, code::bad_config, e.what(), wall_ms);
    }
    session_.emplace(cfg);
    phase_ = Phase::Running;
    wall_at_start_ = wall_ms;
    last_wall_ = wall_ms;
    last_t_ = 0;
    r.messages.push_back(encode(Update{std::nullopt, std::nullopt, 0, 0, cfg.timeout_ms, Status::AwaitingFace}));
    return r;
  }

  Reply& frame(Reply& r, const Frame& f, std::int64_t wall_ms) {
    LandmarkFrame lf = f.frame;
    if (!f.has_time) lf.t_ms = std::max<std::int64_t>(0, wall_ms - wall_at_start_);
    SessionUpdate u;
    try {
      u = session_->ingest_frame(lf);
    } catch (const OutOfOrderFrame& e) {
      r.messages.push_back(encode(Error{std::string(code::out_of_order), e.what()}));
      return r;
    }
    last_t_ = lf.t_ms;
    last_wall_ = wall_ms;
    r.messages.push_back(encode(make_update(u)));
    if (session_->terminal()) return finish(r);
    return r;
  }

  std::string id_;
  SessionConfig base_;
  Phase phase_ = Phase::AwaitHello;
  std::optional<Session> session_;
  std::int64_t wall_at_start_ = 0;
  std::int64_t last_wall_ = 0;
  std::int64_t last_t_ = 0;
};

}  // namespace liveness::wire
