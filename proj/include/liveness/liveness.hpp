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

// Everything except the network gateway (liveness/gateway.hpp, needs Boost).
#include "liveness/agents.hpp"
#include "liveness/batch.hpp"
#include "liveness/errors.hpp"
#include "liveness/geometry.hpp"
#include "liveness/json_io.hpp"
#include "liveness/metrics.hpp"
#include "liveness/protocol.hpp"
#include "liveness/rng.hpp"
#include "liveness/session.hpp"
