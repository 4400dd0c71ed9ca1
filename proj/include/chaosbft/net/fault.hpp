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

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chaosbft/sim/time.hpp"

namespace chaosbft {

enum class FaultKind { Delay, Loss, Corrupt, Pause };

constexpr std::string_view to_string(FaultKind k) {
  switch (k) {
    case FaultKind::Delay: return "delay";
    case FaultKind::Loss: return "loss";
    case FaultKind::Corrupt: return "corrupt";
    case FaultKind::Pause: return "pause";
  }
  return "unknown";
}

inline std::optional<FaultKind> parse_fault_kind(std::string_view s) {
  if (s == "delay") return FaultKind::Delay;
  if (s == "loss") return FaultKind::Loss;
  if (s == "corrupt") return FaultKind::Corrupt;
  if (s == "pause") return FaultKind::Pause;
  return std::nullopt;
}

/// One fault over the half-open window [start, end).
///
/// `nodes` is the affected set. Corrupt and Pause require it; for Delay and
/// Loss an empty set means every link, otherwise only messages sent by a
/// listed node.
struct FaultSpec {
  FaultKind kind = FaultKind::Delay;
  Millis mean_ms = 0;
  Millis jitter_ms = 0;
  double probability = 0.0;
  std::vector<NodeId> nodes;
  SimTime start;
  SimTime end;

  bool contains(SimTime t) const { return start <= t && t < end; }
  bool affects(NodeId n) const { return std::find(nodes.begin(), nodes.end(), n) != nodes.end(); }
  bool applies_to_sender(NodeId src) const { return nodes.empty() || affects(src); }

  bool operator==(const FaultSpec&) const = default;
};

inline FaultSpec delay_fault(SimTime start, SimTime end, Millis mean_ms, Millis jitter_ms = 10) {
  FaultSpec f;
  f.kind = FaultKind::Delay;
  f.mean_ms = mean_ms;
  f.jitter_ms = jitter_ms;
  f.start = start;
  f.end = end;
  return f;
}

inline FaultSpec loss_fault(SimTime start, SimTime end, double p) {
  FaultSpec f;
  f.kind = FaultKind::Loss;
  f.probability = p;
  f.start = start;
  f.end = end;
  return f;
}

inline FaultSpec corrupt_fault(SimTime start, SimTime end, double p, std::vector<NodeId> nodes) {
  FaultSpec f;
  f.kind = FaultKind::Corrupt;
  f.probability = p;
  f.nodes = std::move(nodes);
  f.start = start;
  f.end = end;
  return f;
}

inline FaultSpec pause_fault(SimTime start, SimTime end, std::vector<NodeId> nodes) {
  FaultSpec f;
  f.kind = FaultKind::Pause;
  f.nodes = std::move(nodes);
  f.start = start;
  f.end = end;
  return f;
}

class MalformedWindow : public std::invalid_argument {
 public:
  MalformedWindow(std::size_t index, const std::string& why)
      : std::invalid_argument("fault " + std::to_string(index) + ": " + why), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class UnknownNode : public std::out_of_range {
 public:
  explicit UnknownNode(NodeId n) : std::out_of_range("unknown node " + std::to_string(n)), node_(n) {}
  NodeId node() const { return node_; }

 private:
  NodeId node_;
};

inline void validate_fault(const FaultSpec& f, std::size_t index, std::size_t validators) {
  if (!(f.start < f.end)) throw MalformedWindow(index, "window start must precede end");
  if (f.probability < 0.0 || f.probability > 1.0) throw MalformedWindow(index, "probability outside [0, 1]");
  if ((f.kind == FaultKind::Corrupt || f.kind == FaultKind::Pause) && f.nodes.empty()) {
    throw MalformedWindow(index, std::string(to_string(f.kind)) + " needs affected nodes");
  }
  for (NodeId n : f.nodes) {
    if (n >= validators) throw UnknownNode(n);
  }
}

/// A window boundary the runner turns into a FaultTransition event.
struct FaultTransition {
  SimTime at;
  std::size_t fault = 0;
  bool starts = true;

  bool operator==(const FaultTransition&) const = default;
};

inline std::string describe_fault(const FaultSpec& f) {
  std::string s = "kind=" + std::string(to_string(f.kind));
  auto node_list = [&] {
    std::string out;
    for (std::size_t i = 0; i < f.nodes.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(f.nodes[i]);
    }
    return out;
  };
  switch (f.kind) {
    case FaultKind::Delay:
      s += ";mean_ms=" + std::to_string(f.mean_ms) + ";jitter_ms=" + std::to_string(f.jitter_ms);
      break;
    case FaultKind::Loss:
    case FaultKind::Corrupt: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6g", f.probability);
      s += std::string(";probability=") + buf;
      break;
    }
    case FaultKind::Pause:
      break;
  }
  if (!f.nodes.empty()) s += ";nodes=" + node_list();
  return s;
}

}  // namespace chaosbft
