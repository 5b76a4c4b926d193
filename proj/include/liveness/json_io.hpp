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
#include <fstream>
#include <iosfwd>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "liveness/errors.hpp"
#include "liveness/geometry.hpp"
#include "liveness/session.hpp"

// JSON codecs for the trajectory, config and event-log formats. Field order
// is fixed (ordered_json) and doubles are printed shortest round-trip, so a
// value written and read back is bit-identical.
namespace liveness {

using Json = nlohmann::ordered_json;

namespace detail {

inline const Json& require(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing key '") + key + "'");
  return *it;
}

inline double require_number(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_number()) throw ParseError(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

inline std::int64_t require_integer(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_number_integer()) throw ParseError(std::string("'") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

inline Point2 point_from_json(const Json& j, const char* key) {
  const Json& p = require(j, key);
  if (!p.is_object()) throw ParseError(std::string("'") + key + "' must be an object");
  return {require_number(p, "x"), require_number(p, "y")};
}

}  // namespace detail

inline Json to_json(Point2 p) { return Json{{"x", p.x}, {"y", p.y}}; }

inline Json to_json(const Circle& c) {
  return Json{{"x", c.center.x}, {"y", c.center.y}, {"r", c.radius}};
}

/// Landmark fields in trajectory order, t_ms first when present.
inline void append_frame_fields(Json& out, const LandmarkFrame& f, bool with_time = true) {
  if (with_time) out["t_ms"] = f.t_ms;
  out["bbox"] = Json{{"x_min", f.bbox.x_min},
                     {"y_min", f.bbox.y_min},
                     {"width", f.bbox.width},
                     {"height", f.bbox.height}};
  out["x1"] = f.x1;
  out["x2"] = f.x2;
  out["y1"] = f.y1;
  out["y2"] = f.y2;
  out["m"] = to_json(f.m);
}

inline Json to_json(const LandmarkFrame& f) {
  Json j = Json::object();
  append_frame_fields(j, f);
  return j;
}

/// Reads landmark fields; t_ms is left at 0 when absent and `time_required`
/// is false. Does not check frame invariants (the session does).
inline LandmarkFrame frame_from_json(const Json& j, bool time_required = true,
                                     bool* had_time = nullptr) {
  if (!j.is_object()) throw ParseError("frame must be a JSON object");
  LandmarkFrame f;
  const bool has_t = j.contains("t_ms");
  if (has_t || time_required) f.t_ms = detail::require_integer(j, "t_ms");
  if (had_time) *had_time = has_t;
  const Json& box = detail::require(j, "bbox");
  if (!box.is_object()) throw ParseError("'bbox' must be an object");
  f.bbox = {detail::require_number(box, "x_min"), detail::require_number(box, "y_min"),
            detail::require_number(box, "width"), detail::require_number(box, "height")};
  f.x1 = detail::require_number(j, "x1");
  f.x2 = detail::require_number(j, "x2");
  f.y1 = detail::require_number(j, "y1");
  f.y2 = detail::require_number(j, "y2");
  f.m = detail::point_from_json(j, "m");
  return f;
}

inline std::vector<LandmarkFrame> read_trajectory(std::istream& in) {
  std::vector<LandmarkFrame> frames;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      frames.push_back(frame_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw ParseError(e.what(), line_no);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return frames;
}

inline std::vector<LandmarkFrame> read_trajectory_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trajectory file " + path);
  return read_trajectory(in);
}

inline void write_trajectory(std::ostream& out, const std::vector<LandmarkFrame>& frames) {
  for (const auto& f : frames) out << to_json(f).dump() << '\n';
}

// -- SessionConfig ------------------------------------------------------------

inline Json to_json(const SessionConfig& c) {
  return Json{{"timeout_ms", c.timeout_ms},     {"required_fits", c.required_fits},
              {"dwell_frames", c.dwell_frames}, {"r_ratio", c.r_ratio},
              {"max_face_lost_ms", c.max_face_lost_ms}, {"seed", c.seed}};
}

/// Applies whichever SessionConfig fields `j` names on top of `base`.
/// Unknown keys are rejected; the result is validated.
inline SessionConfig apply_config_overrides(SessionConfig base, const Json& j) {
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const Json& v = it.value();
    auto want_int = [&] {
      if (!v.is_number_integer()) throw ParseError("'" + k + "' must be an integer");
    };
    if (k == "timeout_ms") {
      want_int();
      base.timeout_ms = v.get<std::int64_t>();
    } else if (k == "required_fits") {
      want_int();
      base.required_fits = v.get<int>();
    } else if (k == "dwell_frames") {
      want_int();
      base.dwell_frames = v.get<int>();
    } else if (k == "max_face_lost_ms") {
      want_int();
      base.max_face_lost_ms = v.get<std::int64_t>();
    } else if (k == "r_ratio") {
      if (!v.is_number()) throw ParseError("'r_ratio' must be a number");
      base.r_ratio = v.get<double>();
    } else if (k == "seed") {
      // Decimal strings are accepted because JavaScript clients cannot carry
      // 64-bit integers exactly.
      if (v.is_number_unsigned()) {
        base.seed = v.get<std::uint64_t>();
      } else if (v.is_string()) {
        try {
          std::size_t used = 0;
          const std::string s = v.get<std::string>();
          base.seed = std::stoull(s, &used);
          if (used != s.size()) throw ParseError("'seed' is not a decimal integer");
        } catch (const std::logic_error&) {
          throw ParseError("'seed' is not a decimal integer");
        }
      } else {
        throw ParseError("'seed' must be a non-negative integer");
      }
    } else {
      throw ParseError("unknown config key '" + k + "'");
    }
  }
  validate(base);
  return base;
}

inline SessionConfig read_config_file(const std::string& path, SessionConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return apply_config_overrides(base, j);
}

// -- Event log ------------------------------------------------------------------

inline Json payload_json(const SessionEvent& e) {
  return std::visit(
      [](const auto& p) -> Json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, event::SessionStarted>) {
          return to_json(p.config);
        } else if constexpr (std::is_same_v<T, event::ChallengeIssued>) {
          return Json{{"index", p.index}, {"theta", p.theta}};
        } else if constexpr (std::is_same_v<T, event::FrameProcessed>) {
          return Json{{"dot", to_json(p.dot)}, {"circle", to_json(p.circle)},
                      {"hit", p.hit}, {"dwell", p.dwell}};
        } else if constexpr (std::is_same_v<T, event::FitCompleted>) {
          return Json{{"n", p.n}};
        } else {
          return Json{{"status", std::string(to_string(p.status))}};
        }
      },
      e.payload);
}

inline std::string serialize_event(const SessionEvent& e) {
  Json j = Json::object();
  j["t_ms"] = e.t_ms;
  j["kind"] = std::string(kind_name(e));
  j["payload"] = payload_json(e);
  return j.dump();
}

/// Canonical JSON Lines event log.
inline std::string serialize_events(const std::vector<SessionEvent>& events) {
  std::string out;
  out.reserve(events.size() * 128);
  for (const auto& e : events) {
    out += serialize_event(e);
    out += '\n';
  }
  return out;
}

}  // namespace liveness
