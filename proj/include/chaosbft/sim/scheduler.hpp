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

#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chaosbft/sim/event_log.hpp"
#include "chaosbft/sim/time.hpp"

namespace chaosbft {

enum class EventKind : std::uint8_t { MessageDelivery, Timer, UserAction, FaultTransition, MetricsTick };

constexpr std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::MessageDelivery: return "MessageDelivery";
    case EventKind::Timer: return "Timer";
    case EventKind::UserAction: return "UserAction";
    case EventKind::FaultTransition: return "FaultTransition";
    case EventKind::MetricsTick: return "MetricsTick";
  }
  return "Unknown";
}

class SchedulingInPast : public std::logic_error {
 public:
  SchedulingInPast(SimTime at, SimTime now)
      : std::logic_error("event scheduled at t=" + std::to_string(at.ticks) + " before now=" +
                         std::to_string(now.ticks)) {}
};

template <class Payload>
struct SimEvent {
  SimTime fire_at;
  std::uint64_t sequence = 0;
  EventKind kind = EventKind::Timer;
  Payload payload;
};

/// What the log should say about a dispatched event.
struct EventNote {
  std::optional<NodeId> node;
  std::string detail;
};

template <class Payload>
struct NoDescription {
  EventNote operator()(const Payload&) const { return {}; }
};

/// Single-threaded discrete-event loop. Events fire in (fire_at, sequence)
/// order; sequence numbers are handed out at insertion, so equal-time events
/// keep insertion order. Every dequeued event is logged once, before the
/// dispatcher runs, so the dispatcher's annotations follow it.
template <class Payload, class Describe = NoDescription<Payload>>
class Scheduler {
 public:
  using Event = SimEvent<Payload>;

  explicit Scheduler(Describe describe = Describe{}) : describe_(std::move(describe)) {}

  SimTime now() const { return now_; }
  bool empty() const { return queue_.empty(); }
  std::size_t pending() const { return queue_.size(); }
  std::uint64_t dispatched() const { return dispatched_; }

  /// Sequence of the event currently being dispatched; 0 outside dispatch.
  std::uint64_t current_sequence() const { return current_seq_; }

  EventLog& log() { return log_; }
  const EventLog& log() const { return log_; }

  std::uint64_t schedule(SimTime fire_at, EventKind kind, Payload payload) {
    if (fire_at < now_) throw SchedulingInPast(fire_at, now_);
    const std::uint64_t seq = next_seq_++;
    queue_.push(Event{fire_at, seq, kind, std::move(payload)});
    return seq;
  }

  /// Append an annotation attributed to the event being dispatched.
  void annotate(std::string kind, std::optional<NodeId> node, std::string detail) {
    log_.append(LogRecord{now_.ticks, current_seq_, std::move(kind), node, std::move(detail)});
  }

  /// Dispatches every event with fire_at <= t_end and leaves the clock at
  /// t_end. Returns the records appended during this call.
  template <class Dispatch>
  std::span<const LogRecord> run_until(SimTime t_end, Dispatch&& dispatch) {
    if (t_end < now_) throw SchedulingInPast(t_end, now_);
    const std::size_t first = log_.size();
    while (!queue_.empty() && queue_.top().fire_at <= t_end) {
      Event ev = std::move(const_cast<Event&>(queue_.top()));
      queue_.pop();
      now_ = ev.fire_at;
      current_seq_ = ev.sequence;
      EventNote note = describe_(ev.payload);
      log_.append(LogRecord{now_.ticks, ev.sequence, std::string(to_string(ev.kind)), note.node,
                            std::move(note.detail)});
      ++dispatched_;
      dispatch(ev);
    }
    current_seq_ = 0;
    now_ = t_end;
    return std::span<const LogRecord>(log_.records()).subspan(first);
  }

  std::span<const LogRecord> run_until(SimTime t_end) {
    return run_until(t_end, [](const Event&) {});
  }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
      return a.sequence > b.sequence;
    }
  };

  Describe describe_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  SimTime now_{};
  std::uint64_t next_seq_ = 1;
  std::uint64_t current_seq_ = 0;
  std::uint64_t dispatched_ = 0;
  EventLog log_;
};

}  // namespace chaosbft
