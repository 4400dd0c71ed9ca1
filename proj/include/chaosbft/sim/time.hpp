// Copyright 2026 The chaosbft Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <compare>
#include <cstdint>

namespace chaosbft {

/// Duration in milliseconds of simulated time.
using Millis = std::uint64_t;

/// Validators are numbered 0..n-1; client worker nodes follow at n..n+w-1.
using NodeId = std::uint32_t;

/// Point on the simulated time axis. One tick is one millisecond; tick 0 is
/// simulation start.
struct SimTime {
  std::uint64_t ticks = 0;

  constexpr auto operator<=>(const SimTime&) const = default;
};

constexpr SimTime operator+(SimTime t, Millis d) { return SimTime{t.ticks + d}; }

/// Saturating difference; callers compare against zero-length windows rather
/// than relying on wraparound.
constexpr Millis operator-(SimTime a, SimTime b) {
  return a.ticks >= b.ticks ? a.ticks - b.ticks : 0;
}

constexpr SimTime max(SimTime a, SimTime b) { return a < b ? b : a; }

}  // namespace chaosbft
