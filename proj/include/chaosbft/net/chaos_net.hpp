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
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chaosbft/net/corrupt.hpp"
#include "chaosbft/net/fault.hpp"
#include "chaosbft/net/message.hpp"
#include "chaosbft/sim/rng.hpp"
#include "chaosbft/sim/time.hpp"

namespace chaosbft {

struct NetworkConfig {
  Millis base_latency_ms = 5;
  /// Extra latency drawn uniformly from [0, base_jitter_ms] per message.
  Millis base_jitter_ms = 0;
  /// Client links only see pause unless this is set.
  bool faults_affect_clients = false;
};

enum class SendStatus { Scheduled, PausedDrop, LossDrop };

constexpr std::string_view to_string(SendStatus s) {
  switch (s) {
    case SendStatus::Scheduled: return "Scheduled";
    case SendStatus::PausedDrop: return "PausedDrop";
    case SendStatus::LossDrop: return "LossDrop";
  }
  return "Unknown";
}

struct SendResult {
  SendStatus status = SendStatus::Scheduled;
  /// Meaningful only when Scheduled.
  SimTime deliver_at;
  Message message;
  /// Set when the payload was rewritten on the way.
  std::string corrupt_field;
};

inline constexpr std::string_view kNetBaseStream = "net.base";
inline constexpr std::string_view kNetFaultStream = "net.faults";
inline constexpr std::string_view kNetCorruptStream = "net.corrupt";

/// Point-to-point network over validators 0..n-1 and client nodes after
/// them. Per message the order is fixed: pause, loss, latency and delay,
/// then corruption.
class ChaosNet {
 public:
  ChaosNet(NetworkConfig config, std::size_t validators, std::size_t clients, RngRegistry& rng)
      : config_(config),
        validators_(validators),
        nodes_(validators + clients),
        manual_pause_(validators + clients, 0),
        base_rng_(&rng.register_stream(std::string(kNetBaseStream))),
        fault_rng_(&rng.register_stream(std::string(kNetFaultStream))),
        corrupt_rng_(&rng.register_stream(std::string(kNetCorruptStream))) {}

  const NetworkConfig& config() const { return config_; }
  std::size_t validators() const { return validators_; }
  std::size_t node_count() const { return nodes_; }
  bool is_client(NodeId n) const { return n >= validators_; }

  /// Replaces the schedule. Returns every window boundary in time order for
  /// the caller to turn into FaultTransition events.
  std::vector<FaultTransition> set_fault_schedule(std::vector<FaultSpec> schedule) {
    for (std::size_t i = 0; i < schedule.size(); ++i) validate_fault(schedule[i], i, validators_);
    schedule_ = std::move(schedule);
    std::vector<FaultTransition> out;
    for (std::size_t i = 0; i < schedule_.size(); ++i) {
      out.push_back({schedule_[i].start, i, true});
      out.push_back({schedule_[i].end, i, false});
    }
    std::stable_sort(out.begin(), out.end(), [](const FaultTransition& a, const FaultTransition& b) {
      if (a.at != b.at) return a.at < b.at;
      // Ends first so that back-to-back windows never overlap in the log.
      return !a.starts && b.starts;
    });
    return out;
  }

  const std::vector<FaultSpec>& schedule() const { return schedule_; }

  /// Indices of the faults whose window contains t.
  std::vector<std::size_t> active_faults(SimTime t) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < schedule_.size(); ++i) {
      if (schedule_[i].contains(t)) out.push_back(i);
    }
    return out;
  }

  void pause_node(NodeId n) {
    check(n);
    ++manual_pause_[n];
  }

  void resume_node(NodeId n) {
    check(n);
    if (manual_pause_[n] > 0) --manual_pause_[n];
  }

  bool paused(NodeId n, SimTime t) const {
    check(n);
    if (manual_pause_[n] > 0) return true;
    for (const auto& f : schedule_) {
      if (f.kind == FaultKind::Pause && f.contains(t) && f.affects(n)) return true;
    }
    return false;
  }

  SendResult send(Message m, SimTime now) {
    check(m.src);
    check(m.dst);
    if (m.src == m.dst) throw std::invalid_argument("self-addressed message");
    m.id = next_id_++;
    m.sent_at = now;
    SendResult r;
    if (paused(m.src, now) || paused(m.dst, now)) {
      r.status = SendStatus::PausedDrop;
      r.message = std::move(m);
      return r;
    }
    const bool chaos = config_.faults_affect_clients || (!is_client(m.src) && !is_client(m.dst));
    if (chaos) {
      for (const auto& f : schedule_) {
        if (f.kind == FaultKind::Loss && f.contains(now) && f.applies_to_sender(m.src) &&
            fault_rng_->bernoulli(f.probability)) {
          r.status = SendStatus::LossDrop;
          r.message = std::move(m);
          return r;
        }
      }
    }
    Millis latency = config_.base_latency_ms;
    if (config_.base_jitter_ms > 0) {
      latency += static_cast<Millis>(base_rng_->uniform_int(0, static_cast<std::int64_t>(config_.base_jitter_ms)));
    }
    if (chaos) {
      for (const auto& f : schedule_) {
        if (f.kind == FaultKind::Delay && f.contains(now) && f.applies_to_sender(m.src)) {
          const auto lo = f.mean_ms > f.jitter_ms ? f.mean_ms - f.jitter_ms : 0;
          latency += static_cast<Millis>(fault_rng_->uniform_int(static_cast<std::int64_t>(lo),
                                                                 static_cast<std::int64_t>(f.mean_ms + f.jitter_ms)));
        }
      }
      for (const auto& f : schedule_) {
        if (f.kind == FaultKind::Corrupt && f.contains(now) && f.affects(m.src) &&
            corrupt_rng_->bernoulli(f.probability)) {
          auto c = corrupt_payload(m.payload, *corrupt_rng_);
          m.payload = std::move(c.payload);
          m.corrupted = true;
          r.corrupt_field = std::move(c.field);
          break;
        }
      }
    }
    r.deliver_at = now + latency;
    r.message = std::move(m);
    return r;
  }

  /// Delivery-time check: a message to or from a node that is paused when
  /// it lands is dropped, never buffered.
  bool deliverable(const Message& m, SimTime now) const { return !paused(m.dst, now) && !paused(m.src, now); }

 private:
  void check(NodeId n) const {
    if (n >= nodes_) throw UnknownNode(n);
  }

  NetworkConfig config_;
  std::size_t validators_;
  std::size_t nodes_;
  std::vector<int> manual_pause_;
  std::vector<FaultSpec> schedule_;
  RngStream* base_rng_;
  RngStream* fault_rng_;
  RngStream* corrupt_rng_;
  std::uint64_t next_id_ = 1;
};

}  // namespace chaosbft
