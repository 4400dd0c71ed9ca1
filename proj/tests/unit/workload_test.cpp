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


#include <map>
#include <optional>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "chaosbft/workload/workload.hpp"

namespace chaosbft {
namespace {

LoadProfile one_stage(std::uint64_t users, double rate, Millis hold) {
  LoadProfile p;
  p.stages = {LoadStage{users, rate, hold}};
  return p;
}

/// Drives a Workload on its own. Receipts come back after `receipt_ms`, or
/// never when it is empty.
struct Driver {
  Driver(LoadProfile p, std::size_t validators, std::optional<Millis> receipt_ms, std::uint64_t seed = 1)
      : rng(seed), w(std::move(p), validators, rng), receipt(receipt_ms) {
    for (auto& [t, a] : w.initial_schedule()) push(t, a);
  }

  void push(SimTime t, UserAction a) { queue.emplace(std::make_pair(t, seq++), a); }

  void apply(const WorkloadEffects& fx, SimTime now) {
    for (auto& [t, a] : fx.schedule) push(t, a);
    for (const auto& s : fx.submit) {
      submissions.push_back({now, s});
      if (receipt) receipts.emplace(std::make_pair(now + *receipt, seq++), s.tx.id);
    }
    for (const auto& t : fx.timed_out) timeouts.push_back(t.first);
  }

  void run_until(SimTime end) {
    while (true) {
      const bool have_a = !queue.empty() && queue.begin()->first.first <= end;
      const bool have_r = !receipts.empty() && receipts.begin()->first.first <= end;
      if (!have_a && !have_r) break;
      if (have_r && (!have_a || receipts.begin()->first < queue.begin()->first)) {
        auto [key, tx] = *receipts.begin();
        receipts.erase(receipts.begin());
        apply(w.on_receipt(tx, key.first), key.first);
      } else {
        auto [key, a] = *queue.begin();
        queue.erase(queue.begin());
        apply(w.on_action(a, key.first), key.first);
        if (on_action) on_action(a, key.first);
      }
    }
  }

  RngRegistry rng;
  Workload w;
  std::optional<Millis> receipt;
  std::uint64_t seq = 0;
  std::map<std::pair<SimTime, std::uint64_t>, UserAction> queue;
  std::map<std::pair<SimTime, std::uint64_t>, TxId> receipts;
  std::vector<std::pair<SimTime, Submission>> submissions;
  std::vector<TxId> timeouts;
  std::function<void(const UserAction&, SimTime)> on_action;
};

TEST(Ramp, TwoHundredFiftyUsersAtThreePerSecond) {
  const auto p = one_stage(250, 3.0, 0);
  EXPECT_EQ(first_ramp(p), 83'333u);
  EXPECT_NEAR(first_ramp(p) / 1000.0, 83.3, 0.05);
  RngRegistry rng(1);
  const auto sched = Workload(p, 6, rng).initial_schedule();
  ASSERT_EQ(sched.size(), 250u);
  EXPECT_EQ(sched.back().first, SimTime{83'333});
  EXPECT_EQ(sched.front().first, SimTime{333});
}

TEST(Ramp, ZeroUsersSubmitNothing) {
  Driver d(one_stage(0, 3.0, 60'000), 6, Millis{100});
  d.run_until(SimTime{60'000});
  EXPECT_TRUE(d.submissions.empty());
  EXPECT_EQ(d.w.active_users(), 0u);
}

TEST(Ramp, ZeroRateIsInfeasible) {
  RngRegistry rng(1);
  EXPECT_THROW(Workload(one_stage(10, 0.0, 1000), 6, rng), ProfileInfeasible);
  RngRegistry rng2(1);
  EXPECT_NO_THROW(Workload(one_stage(0, 0.0, 1000), 6, rng2));
}

TEST(Ramp, PaperLoadLadderIsMonotone) {
  LoadProfile p;
  p.stages = {{250, 3, 30'000}, {500, 3, 30'000}, {1000, 6, 30'000}, {1500, 6, 30'000}};
  Driver d(p, 6, Millis{200});
  std::uint64_t last = 0;
  bool monotone = true;
  d.on_action = [&](const UserAction&, SimTime) {
    monotone &= d.w.active_users() >= last;
    last = d.w.active_users();
  };
  d.run_until(SimTime{profile_end(p)});
  EXPECT_TRUE(monotone);
  EXPECT_EQ(d.w.active_users(), 1500u);
  EXPECT_EQ(profile_end(p), 83'333u + 83'333u + 83'333u + 83'333u + 4 * 30'000u);
}

TEST(Ramp, StepDownStopsUsers) {
  LoadProfile p;
  p.stages = {{20, 10, 5'000}, {5, 5, 5'000}};
  Driver d(p, 6, Millis{100});
  d.run_until(SimTime{profile_end(p)});
  EXPECT_EQ(d.w.active_users(), 5u);
}

// Open loop, 100 users, think uniform in [500, 1500]: 100 tx/s offered.
TEST(OfferedLoad, OpenLoopMatchesUsersOverThinkTime) {
  auto p = one_stage(100, 50.0, 120'000);
  p.closed_loop = false;
  Driver d(p, 6, std::nullopt);
  d.run_until(SimTime{profile_end(p)});
  const double expected = 100.0 / 1.0;
  for (Millis start = 5'000; start + 30'000 <= profile_end(p); start += 10'000) {
    std::size_t n = 0;
    for (const auto& [t, s] : d.submissions) n += t >= SimTime{start} && t < SimTime{start + 30'000};
    const double rate = static_cast<double>(n) / 30.0;
    EXPECT_NEAR(rate, expected, expected * 0.10) << "window at " << start;
  }
}

TEST(ClosedLoop, NeverTwoInFlight) {
  auto p = one_stage(40, 20.0, 60'000);
  p.response_timeout_ms = 1000;
  // Receipts arrive after the timeout, so every request times out and the
  // next one may only follow it.
  Driver d(p, 4, Millis{1200});
  d.run_until(SimTime{profile_end(p)});
  std::map<std::uint32_t, SimTime> last;
  for (const auto& [t, s] : d.submissions) {
    auto it = last.find(s.user);
    if (it != last.end()) {
      EXPECT_GE(t - it->second, 1000u) << "user " << s.user;
    }
    last[s.user] = t;
  }
  EXPECT_GT(d.timeouts.size(), 0u);
  EXPECT_LE(d.w.in_flight(), 40u);
}

TEST(ClosedLoop, InFlightNeverExceedsOnePerUser) {
  auto p = one_stage(30, 30.0, 30'000);
  Driver d(p, 6, Millis{50});
  bool ok = true;
  d.on_action = [&](const UserAction&, SimTime) { ok &= d.w.in_flight() <= d.w.active_users(); };
  d.run_until(SimTime{profile_end(p)});
  EXPECT_TRUE(ok);
  EXPECT_GT(d.submissions.size(), 500u);
}

TEST(ClientTimeout, RetryGoesToNextEndpointImmediately) {
  auto p = one_stage(1, 10.0, 30'000);
  p.response_timeout_ms = 2000;
  Driver d(p, 6, std::nullopt);
  d.run_until(SimTime{9'000});
  ASSERT_GE(d.submissions.size(), 4u);
  for (std::size_t i = 1; i < d.submissions.size(); ++i) {
    const auto& [t0, s0] = d.submissions[i - 1];
    const auto& [t1, s1] = d.submissions[i];
    EXPECT_EQ(t1 - t0, 2000u);
    EXPECT_EQ(s1.endpoint, (s0.endpoint + 1) % 6);
    EXPECT_NE(s1.tx.id, s0.tx.id);
  }
  EXPECT_EQ(d.timeouts.size(), d.submissions.size() - 1);
}

TEST(Submission, ShapeOfGeneratedTransfers) {
  auto p = one_stage(12, 12.0, 20'000);
  Driver d(p, 6, Millis{100});
  d.run_until(SimTime{profile_end(p)});
  std::set<TxId> ids;
  for (const auto& [t, s] : d.submissions) {
    EXPECT_GE(s.tx.amount, 1u);
    EXPECT_LE(s.tx.amount, 10u);
    EXPECT_NE(s.tx.from, s.tx.to);
    EXPECT_EQ(s.tx.created_at, t);
    EXPECT_EQ(s.client, 6u + s.user % 3);
    EXPECT_EQ(s.endpoint, s.user % 6);
    EXPECT_TRUE(ids.insert(s.tx.id).second);
  }
  const auto g = d.w.genesis_state();
  EXPECT_EQ(g.size(), 24u);
}

TEST(Submission, SameSeedSameStream) {
  auto p = one_stage(20, 5.0, 10'000);
  Driver a(p, 6, Millis{80}, 7);
  Driver b(p, 6, Millis{80}, 7);
  a.run_until(SimTime{profile_end(p)});
  b.run_until(SimTime{profile_end(p)});
  ASSERT_EQ(a.submissions.size(), b.submissions.size());
  for (std::size_t i = 0; i < a.submissions.size(); ++i) {
    EXPECT_EQ(a.submissions[i].first, b.submissions[i].first);
    EXPECT_EQ(a.submissions[i].second.tx, b.submissions[i].second.tx);
  }
}

}  // namespace
}  // namespace chaosbft
