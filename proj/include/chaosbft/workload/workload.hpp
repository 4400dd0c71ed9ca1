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
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chaosbft/ledger/account_state.hpp"
#include "chaosbft/ledger/block.hpp"
#include "chaosbft/sim/rng.hpp"
#include "chaosbft/sim/time.hpp"

namespace chaosbft {

/// Ramp to `target_users` at `spawn_rate` users per second, then hold.
struct LoadStage {
  std::uint64_t target_users = 250;
  double spawn_rate = 3.0;
  Millis hold_ms = 60000;

  bool operator==(const LoadStage&) const = default;
};

struct LoadProfile {
  std::vector<LoadStage> stages{LoadStage{}};
  Millis think_min_ms = 500;
  Millis think_max_ms = 1500;
  std::size_t workers = 3;
  /// Closed loop waits for the receipt (or the timeout) before the next
  /// submission; open loop submits every think time regardless.
  bool closed_loop = true;
  Millis response_timeout_ms = 10000;
  std::uint64_t amount_min = 1;
  std::uint64_t amount_max = 10;
  bool scarce_funding = false;

  bool operator==(const LoadProfile&) const = default;
};

inline constexpr std::uint64_t kDefaultFunding = 1'000'000;
inline constexpr std::uint64_t kScarceFunding = 20;

class ProfileInfeasible : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Offset of the k-th (0-based) spawn or stop within a ramp.
inline Millis ramp_offset(std::uint64_t k, double rate) {
  return static_cast<Millis>(std::floor(static_cast<double>(k + 1) * 1000.0 / rate));
}

inline Millis ramp_duration(std::uint64_t from, std::uint64_t to, double rate) {
  const std::uint64_t delta = from > to ? from - to : to - from;
  return delta == 0 ? 0 : ramp_offset(delta - 1, rate);
}

inline void check_profile(const LoadProfile& p) {
  std::uint64_t users = 0;
  for (std::size_t i = 0; i < p.stages.size(); ++i) {
    const auto& s = p.stages[i];
    if (s.target_users != users && !(s.spawn_rate > 0.0)) {
      throw ProfileInfeasible("stage " + std::to_string(i) + ": spawn_rate must be positive to reach " +
                              std::to_string(s.target_users) + " users");
    }
    users = s.target_users;
  }
  if (p.think_min_ms > p.think_max_ms) throw ProfileInfeasible("think_min_ms exceeds think_max_ms");
  if (p.amount_min > p.amount_max) throw ProfileInfeasible("amount_min exceeds amount_max");
  if (p.workers == 0) throw ProfileInfeasible("workers must be positive");
}

/// Simulated time at which the last stage finishes holding.
inline Millis profile_end(const LoadProfile& p) {
  Millis t = 0;
  std::uint64_t users = 0;
  for (const auto& s : p.stages) {
    t += ramp_duration(users, s.target_users, s.spawn_rate) + s.hold_ms;
    users = s.target_users;
  }
  return t;
}

/// Ramp time of the first stage; the default warm-up exclusion.
inline Millis first_ramp(const LoadProfile& p) {
  if (p.stages.empty()) return 0;
  return ramp_duration(0, p.stages.front().target_users, p.stages.front().spawn_rate);
}

inline std::uint64_t peak_users(const LoadProfile& p) {
  std::uint64_t m = 0;
  for (const auto& s : p.stages) m = std::max(m, s.target_users);
  return m;
}

struct UserAction {
  enum class Kind { Spawn, Submit, Timeout, Stop };
  Kind kind = Kind::Spawn;
  std::uint32_t user = 0;
  std::uint64_t token = 0;
};

constexpr std::string_view to_string(UserAction::Kind k) {
  switch (k) {
    case UserAction::Kind::Spawn: return "Spawn";
    case UserAction::Kind::Submit: return "Submit";
    case UserAction::Kind::Timeout: return "Timeout";
    case UserAction::Kind::Stop: return "Stop";
  }
  return "Unknown";
}

struct Submission {
  Transaction tx;
  std::uint32_t user = 0;
  NodeId client = 0;
  NodeId endpoint = 0;
};

struct WorkloadEffects {
  std::vector<std::pair<SimTime, UserAction>> schedule;
  std::vector<Submission> submit;
  /// Requests given up on (ClientTimeout), with the user that sent them.
  std::vector<std::pair<TxId, std::uint32_t>> timed_out;
};

/// The user population. Users are actors inside the event loop: the runner
/// feeds it UserAction events and receipts and carries out the effects.
class Workload {
 public:
  Workload(LoadProfile profile, std::size_t validators, RngRegistry& rng)
      : profile_(std::move(profile)), validators_(validators), rng_(&rng.register_stream("workload")) {
    check_profile(profile_);
    if (validators_ == 0) throw ProfileInfeasible("no validators to submit to");
    users_.resize(peak_users(profile_));
  }

  const LoadProfile& profile() const { return profile_; }

  /// Two accounts per user, funded so transfers never run dry unless the
  /// profile asks for scarce funding.
  AccountState genesis_state() const {
    AccountState s;
    const std::uint64_t funding = profile_.scarce_funding ? kScarceFunding : kDefaultFunding;
    for (std::uint64_t u = 0; u < users_.size(); ++u) {
      s.create_account(static_cast<AccountId>(2 * u), funding);
      s.create_account(static_cast<AccountId>(2 * u + 1), funding);
    }
    return s;
  }

  NodeId client_node(std::uint32_t user) const {
    return static_cast<NodeId>(validators_ + user % profile_.workers);
  }

  /// Spawn and stop events for the whole profile.
  std::vector<std::pair<SimTime, UserAction>> initial_schedule() const {
    std::vector<std::pair<SimTime, UserAction>> out;
    Millis stage_start = 0;
    std::uint64_t users = 0;
    for (const auto& s : profile_.stages) {
      if (s.target_users > users) {
        for (std::uint64_t k = 0; k < s.target_users - users; ++k) {
          out.push_back({SimTime{stage_start + ramp_offset(k, s.spawn_rate)},
                         UserAction{UserAction::Kind::Spawn, static_cast<std::uint32_t>(users + k), 0}});
        }
      } else {
        for (std::uint64_t k = 0; k < users - s.target_users; ++k) {
          out.push_back({SimTime{stage_start + ramp_offset(k, s.spawn_rate)},
                         UserAction{UserAction::Kind::Stop, static_cast<std::uint32_t>(users - 1 - k), 0}});
        }
      }
      stage_start += ramp_duration(users, s.target_users, s.spawn_rate) + s.hold_ms;
      users = s.target_users;
    }
    return out;
  }

  WorkloadEffects on_action(const UserAction& a, SimTime now) {
    WorkloadEffects fx;
    User& u = users_.at(a.user);
    switch (a.kind) {
      case UserAction::Kind::Spawn:
        if (u.active) break;
        u.active = true;
        ++active_;
        if (!u.spawned) {
          u.spawned = true;
          u.endpoint = static_cast<NodeId>(a.user % validators_);
        }
        schedule_submit(fx, a.user, now + think());
        break;
      case UserAction::Kind::Submit:
        if (!u.active || a.token != u.token) break;
        submit(fx, a.user, now);
        if (!profile_.closed_loop) schedule_submit(fx, a.user, now + think());
        break;
      case UserAction::Kind::Timeout:
        if (!u.active || a.token != u.token || !u.inflight) break;
        fx.timed_out.push_back({*u.inflight, a.user});
        ++timeouts_;
        inflight_owner_.erase(*u.inflight);
        u.inflight.reset();
        u.endpoint = static_cast<NodeId>((u.endpoint + 1) % validators_);
        submit(fx, a.user, now);
        break;
      case UserAction::Kind::Stop:
        if (!u.active) break;
        u.active = false;
        --active_;
        ++u.token;
        if (u.inflight) inflight_owner_.erase(*u.inflight);
        u.inflight.reset();
        break;
    }
    return fx;
  }

  /// A validator answered `tx`. Closed-loop users move on after a think time.
  WorkloadEffects on_receipt(TxId tx, SimTime now) {
    WorkloadEffects fx;
    auto it = inflight_owner_.find(tx);
    if (it == inflight_owner_.end()) return fx;
    const std::uint32_t user = it->second;
    inflight_owner_.erase(it);
    User& u = users_.at(user);
    u.inflight.reset();
    if (u.active && profile_.closed_loop) schedule_submit(fx, user, now + think());
    return fx;
  }

  std::uint64_t active_users() const { return active_; }
  std::uint64_t submitted() const { return next_tx_ - 1; }
  std::uint64_t timeouts() const { return timeouts_; }
  std::size_t in_flight() const { return inflight_owner_.size(); }
  bool user_in_flight(std::uint32_t user) const { return users_.at(user).inflight.has_value(); }

 private:
  struct User {
    bool spawned = false;
    bool active = false;
    std::uint64_t token = 0;
    NodeId endpoint = 0;
    std::optional<TxId> inflight;
    bool flip = false;
  };

  Millis think() {
    return static_cast<Millis>(rng_->uniform_int(static_cast<std::int64_t>(profile_.think_min_ms),
                                                 static_cast<std::int64_t>(profile_.think_max_ms)));
  }

  void schedule_submit(WorkloadEffects& fx, std::uint32_t user, SimTime at) {
    User& u = users_.at(user);
    ++u.token;
    fx.schedule.push_back({at, UserAction{UserAction::Kind::Submit, user, u.token}});
  }

  void submit(WorkloadEffects& fx, std::uint32_t user, SimTime now) {
    User& u = users_.at(user);
    Transaction tx;
    tx.id = next_tx_++;
    const auto a = static_cast<AccountId>(2 * user);
    tx.from = u.flip ? a + 1 : a;
    tx.to = u.flip ? a : a + 1;
    u.flip = !u.flip;
    tx.amount = static_cast<std::uint64_t>(rng_->uniform_int(static_cast<std::int64_t>(profile_.amount_min),
                                                             static_cast<std::int64_t>(profile_.amount_max)));
    tx.created_at = now;
    fx.submit.push_back(Submission{tx, user, client_node(user), u.endpoint});
    if (profile_.closed_loop) {
      u.inflight = tx.id;
      inflight_owner_[tx.id] = user;
      ++u.token;
      fx.schedule.push_back(
          {now + profile_.response_timeout_ms, UserAction{UserAction::Kind::Timeout, user, u.token}});
    }
  }

  LoadProfile profile_;
  std::size_t validators_;
  RngStream* rng_;
  std::vector<User> users_;
  std::map<TxId, std::uint32_t> inflight_owner_;
  std::uint64_t active_ = 0;
  std::uint64_t next_tx_ = 1;
  std::uint64_t timeouts_ = 0;
};

}  // namespace chaosbft
