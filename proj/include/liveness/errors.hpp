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

#include <stdexcept>
#include <string>

namespace liveness {

class LivenessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Landmark frame or configuration violates its invariants.
class ValidationError : public LivenessError {
 public:
  using LivenessError::LivenessError;
};

/// Session API used out of contract (ingest after verdict, result before
/// verdict, decreasing timestamps).
class SessionMisuse : public LivenessError {
 public:
  using LivenessError::LivenessError;
};

class OutOfOrderFrame : public SessionMisuse {
 public:
  using SessionMisuse::SessionMisuse;
};

/// A rate whose denominator is zero.
class UndefinedRateError : public LivenessError {
 public:
  using LivenessError::LivenessError;
};

/// Malformed trajectory / config / wire input. Carries a 1-based line number
/// when the input is line oriented (0 otherwise).
class ParseError : public LivenessError {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : LivenessError(line ? "line " + std::to_string(line) + ": " + what
                           : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace liveness
