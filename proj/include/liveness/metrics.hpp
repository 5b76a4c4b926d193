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
#include <cstdio>
#include <string>

#include "liveness/errors.hpp"

// ISO/IEC 30107-3 presentation attack detection error rates.
namespace liveness {

/// Bona fide presentations are the positive class, attacks the negative.
struct ConfusionCounts {
  std::int64_t bona_fide_total = 0;
  std::int64_t attack_total = 0;
  std::int64_t false_accepts = 0;  ///< attacks labeled live
  std::int64_t false_rejects = 0;  ///< bona fide labeled attack

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    bona_fide_total += o.bona_fide_total;
    attack_total += o.attack_total;
    false_accepts += o.false_accepts;
    false_rejects += o.false_rejects;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;

  std::int64_t total() const noexcept { return bona_fide_total + attack_total; }
  std::int64_t errors() const noexcept { return false_accepts + false_rejects; }
};

inline void validate(const ConfusionCounts& c) {
  if (c.bona_fide_total < 0 || c.attack_total < 0 || c.false_accepts < 0 || c.false_rejects < 0) {
    throw ValidationError("confusion counts must be non-negative");
  }
  if (c.false_accepts > c.attack_total) throw ValidationError("false_accepts exceeds attack_total");
  if (c.false_rejects > c.bona_fide_total) throw ValidationError("false_rejects exceeds bona_fide_total");
}

/// Positive and negative roles exchanged.
constexpr ConfusionCounts swap_labels(const ConfusionCounts& c) noexcept {
  return {c.attack_total, c.bona_fide_total, c.false_rejects, c.false_accepts};
}

/// Rates are fractions in [0, 1]; use percent() for display.
struct EvalReport {
  ConfusionCounts counts;
  double apcer = 0.0;
  double bpcer = 0.0;
  double acer = 0.0;
  double accuracy = 0.0;

  // Pre-ISO names for the same quantities.
  double far() const noexcept { return apcer; }
  double frr() const noexcept { return bpcer; }
  double hter() const noexcept { return acer; }
};

inline double apcer_of(const ConfusionCounts& c) {
  if (c.attack_total == 0) throw UndefinedRateError("APCER undefined: no attack presentations");
  return static_cast<double>(c.false_accepts) / static_cast<double>(c.attack_total);
}

inline double bpcer_of(const ConfusionCounts& c) {
  if (c.bona_fide_total == 0) throw UndefinedRateError("BPCER undefined: no bona fide presentations");
  return static_cast<double>(c.false_rejects) / static_cast<double>(c.bona_fide_total);
}

inline EvalReport compute_metrics(const ConfusionCounts& c) {
  validate(c);
  EvalReport r;
  r.counts = c;
  r.apcer = apcer_of(c);
  r.bpcer = bpcer_of(c);
  r.acer = (r.apcer + r.bpcer) / 2.0;
  r.accuracy = static_cast<double>(c.total() - c.errors()) / static_cast<double>(c.total());
  return r;
}

/// Fraction rendered as a percentage with two decimals, e.g. 0.015873 -> "1.59".
inline std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

}  // namespace liveness
