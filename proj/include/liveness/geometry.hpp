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
#include <numbers>
#include <string>

#include "liveness/errors.hpp"
#include "liveness/rng.hpp"

/**
 * Head-pose geometry of the dot-into-circle challenge.
 *
 * All coordinates are image pixels: origin top-left, y grows downward. The
 * engine never sees pixels, only the face box and five landmarks, so any
 * image resolution works as long as the landmark provider copes with it.
 */
namespace liveness {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2 operator+(Point2 p, Point2 q) { return {p.x + q.x, p.y + q.y}; }
  friend constexpr Point2 operator-(Point2 p, Point2 q) { return {p.x - q.x, p.y - q.y}; }
  friend constexpr bool operator==(Point2, Point2) = default;
};

struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double width = 0.0;
  double height = 0.0;

  constexpr Point2 center() const { return {x_min + width / 2.0, y_min + height / 2.0}; }
  friend constexpr bool operator==(const BBox&, const BBox&) = default;
};

/// One face observation: x1/x2 are the left/right face sides, y1/y2 the
/// mid-forehead and mid-chin, m the nose tip.
struct LandmarkFrame {
  std::int64_t t_ms = 0;
  BBox bbox;
  double x1 = 0.0;
  double x2 = 0.0;
  double y1 = 0.0;
  double y2 = 0.0;
  Point2 m;

  friend bool operator==(const LandmarkFrame&, const LandmarkFrame&) = default;
};

struct PoseState {
  Point2 c1;  ///< face box center
  Point2 c2;  ///< pose-determining box center, i.e. the dot
  double a = 0.0;
  double b = 0.0;

  Point2 offset() const { return c2 - c1; }
};

struct Challenge {
  double theta = 0.0;  ///< radians in (pi, 2*pi)
  double r_ratio = 0.15;
  std::int64_t created_at_ms = 0;
};

struct Circle {
  Point2 center;
  double radius = 0.0;
};

/// Reason string if the frame violates LandmarkFrame invariants, empty if ok.
inline std::string frame_violation(const LandmarkFrame& f) {
  const double values[] = {f.bbox.x_min, f.bbox.y_min, f.bbox.width, f.bbox.height,
                           f.x1, f.x2, f.y1, f.y2, f.m.x, f.m.y};
  for (double v : values) {
    if (!std::isfinite(v)) return "non-finite coordinate";
  }
  if (f.t_ms < 0) return "negative t_ms";
  if (!(f.bbox.width > 0.0) || !(f.bbox.height > 0.0)) return "degenerate bbox";
  if (!(f.x1 < f.x2)) return "x1 must be < x2";
  if (!(f.y1 < f.y2)) return "y1 must be < y2";
  return {};
}

inline bool is_valid(const LandmarkFrame& f) { return frame_violation(f).empty(); }

inline void validate(const LandmarkFrame& f) {
  if (auto why = frame_violation(f); !why.empty()) throw ValidationError("invalid frame: " + why);
}

/// Pose-determining box: c2 = c1 + (d_l - d_r, d_u - d_d) where the d's are
/// the absolute nose-tip distances to each face side. No clamping when the
/// nose leaves [x1, x2].
inline PoseState compute_pose_state_unchecked(const LandmarkFrame& f) noexcept {
  const double d_l = std::abs(f.x1 - f.m.x);
  const double d_r = std::abs(f.x2 - f.m.x);
  const double d_u = std::abs(f.y1 - f.m.y);
  const double d_d = std::abs(f.y2 - f.m.y);
  PoseState p;
  p.c1 = f.bbox.center();
  p.c2 = p.c1 + Point2{d_l - d_r, d_u - d_d};
  p.a = std::abs(f.x1 - f.x2) / 2.0;
  p.b = std::abs(f.y1 - f.y2) / 2.0;
  return p;
}

inline PoseState compute_pose_state(const LandmarkFrame& f) {
  validate(f);
  return compute_pose_state_unchecked(f);
}

/// Challenge angle on the upper half-ellipse, drawn on the side opposite to
/// the current head pose. Ties (c1.x == c2.x) take the right-hand quadrant.
inline double sample_theta(const PoseState& pose, Rng& rng) {
  constexpr double pi = std::numbers::pi;
  if (pose.c1.x >= pose.c2.x) return rng.uniform_open(3.0 * pi / 2.0, 2.0 * pi);
  return rng.uniform_open(pi, 3.0 * pi / 2.0);
}

/// Re-anchors the challenge circle to the current face; theta stays fixed.
inline Circle target_circle(const PoseState& pose, const Challenge& ch) noexcept {
  return {{pose.a * std::cos(ch.theta) + pose.c1.x, pose.b * std::sin(ch.theta) + pose.c1.y},
          ch.r_ratio * pose.a};
}

/// Inclusive: a dot exactly on the rim is inside.
constexpr bool hit_test(Point2 dot, Point2 center, double radius) noexcept {
  const double dx = dot.x - center.x;
  const double dy = dot.y - center.y;
  return dx * dx + dy * dy <= radius * radius;
}

constexpr bool hit_test(Point2 dot, const Circle& c) noexcept {
  return hit_test(dot, c.center, c.radius);
}

/// Nose position that makes the dot land at c1 + desired_offset, given the
/// face outline of `f`. Valid while the nose stays inside [x1,x2]x[y1,y2].
constexpr Point2 nose_for_offset(const LandmarkFrame& f, Point2 desired_offset) noexcept {
  return {((f.x1 + f.x2) + desired_offset.x) / 2.0, ((f.y1 + f.y2) + desired_offset.y) / 2.0};
}

}  // namespace liveness
