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


#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "chaosbft/net/chaos_net.hpp"
#include "chaosbft/net/corrupt.hpp"

namespace chaosbft {
namespace {

Message prepare(NodeId src, NodeId dst, Digest d = 0xabcdef) {
  Message m;
  m.src = src;
  m.dst = dst;
  m.payload = msg::Prepare{0, 1, d};
  return m;
}

struct NetFixture : ::testing::Test {
  RngRegistry rng{11};
  NetworkConfig cfg{5, 0, false};
  ChaosNet net{cfg, 6, 3, rng};
};

TEST_F(NetFixture, BaseLatencyOnly) {
  auto r = net.send(prepare(0, 1), SimTime{100});
  EXPECT_EQ(r.status, SendStatus::Scheduled);
  EXPECT_EQ(r.deliver_at, SimTime{105});
  EXPECT_FALSE(r.message.corrupted);
}

TEST_F(NetFixture, TotalLossDropsEverything) {
  net.set_fault_schedule({loss_fault(SimTime{0}, SimTime{10'000}, 1.0)});
  int delivered = 0;
  for (int i = 0; i < 500; ++i) {
    if (net.send(prepare(static_cast<NodeId>(i % 6), static_cast<NodeId>((i + 1) % 6)), SimTime{10}).status ==
        SendStatus::Scheduled) {
      ++delivered;
    }
  }
  EXPECT_EQ(delivered, 0);
}

TEST_F(NetFixture, FixedDelayAddsExactly) {
  net.set_fault_schedule({delay_fault(SimTime{0}, SimTime{1000}, 100, 0)});
  auto r = net.send(prepare(2, 3), SimTime{40});
  EXPECT_EQ(r.deliver_at, SimTime{40 + 5 + 100});
}

TEST_F(NetFixture, JitteredDelayStaysInBand) {
  net.set_fault_schedule({delay_fault(SimTime{0}, SimTime{1000}, 100, 10)});
  for (int i = 0; i < 1000; ++i) {
    auto r = net.send(prepare(2, 3), SimTime{0});
    ASSERT_GE(r.deliver_at, SimTime{95});
    ASSERT_LE(r.deliver_at, SimTime{115});
  }
}

// Binomial(10000, 0.15): sd = 35.7 messages, so [0.13, 0.17] is beyond 5 sd.
TEST_F(NetFixture, PartialLossFraction) {
  net.set_fault_schedule({loss_fault(SimTime{0}, SimTime{1000}, 0.15)});
  int dropped = 0;
  for (int i = 0; i < 10'000; ++i) {
    if (net.send(prepare(0, 1), SimTime{1}).status == SendStatus::LossDrop) ++dropped;
  }
  const double frac = dropped / 10'000.0;
  EXPECT_GE(frac, 0.13);
  EXPECT_LE(frac, 0.17);
}

TEST_F(NetFixture, ClientLinksIgnoreChaosByDefault) {
  net.set_fault_schedule({loss_fault(SimTime{0}, SimTime{1000}, 1.0)});
  EXPECT_EQ(net.send(prepare(6, 0), SimTime{1}).status, SendStatus::Scheduled);
  EXPECT_EQ(net.send(prepare(0, 1), SimTime{1}).status, SendStatus::LossDrop);
}

TEST_F(NetFixture, PausedEndpointsDrop) {
  net.set_fault_schedule({pause_fault(SimTime{100}, SimTime{200}, {3, 4, 5})});
  EXPECT_EQ(net.send(prepare(0, 3), SimTime{150}).status, SendStatus::PausedDrop);
  EXPECT_EQ(net.send(prepare(4, 0), SimTime{150}).status, SendStatus::PausedDrop);
  EXPECT_EQ(net.send(prepare(0, 1), SimTime{150}).status, SendStatus::Scheduled);
  EXPECT_EQ(net.send(prepare(0, 3), SimTime{200}).status, SendStatus::Scheduled);
}

TEST_F(NetFixture, InFlightMessageToNodeThatPausesIsNotDeliverable) {
  net.set_fault_schedule({pause_fault(SimTime{103}, SimTime{200}, {1})});
  auto r = net.send(prepare(0, 1), SimTime{100});
  ASSERT_EQ(r.status, SendStatus::Scheduled);
  EXPECT_FALSE(net.deliverable(r.message, r.deliver_at));
}

TEST_F(NetFixture, ManualPauseResume) {
  net.pause_node(2);
  EXPECT_TRUE(net.paused(2, SimTime{0}));
  net.resume_node(2);
  EXPECT_FALSE(net.paused(2, SimTime{0}));
  EXPECT_EQ(net.send(prepare(2, 1), SimTime{0}).status, SendStatus::Scheduled);
  EXPECT_THROW(net.pause_node(42), UnknownNode);
}

TEST_F(NetFixture, UnknownNodeAndSelfSend) {
  EXPECT_THROW(net.send(prepare(0, 17), SimTime{0}), UnknownNode);
  EXPECT_THROW(net.send(prepare(1, 1), SimTime{0}), std::invalid_argument);
}

TEST_F(NetFixture, CorruptionOnlyFromAffectedSenders) {
  net.set_fault_schedule({corrupt_fault(SimTime{0}, SimTime{1000}, 1.0, {0})});
  auto bad = net.send(prepare(0, 1), SimTime{1});
  EXPECT_TRUE(bad.message.corrupted);
  EXPECT_FALSE(bad.corrupt_field.empty());
  EXPECT_NE(bad.message.payload, prepare(0, 1).payload);
  auto good = net.send(prepare(1, 0), SimTime{1});
  EXPECT_FALSE(good.message.corrupted);
}

TEST(FaultSchedule, ActiveQueriesAreHalfOpen) {
  RngRegistry rng(1);
  ChaosNet net({5, 0, false}, 4, 0, rng);
  auto transitions = net.set_fault_schedule({delay_fault(SimTime{100}, SimTime{200}, 100, 0)});
  ASSERT_EQ(transitions.size(), 2u);
  EXPECT_EQ(transitions[0], (FaultTransition{SimTime{100}, 0, true}));
  EXPECT_EQ(transitions[1], (FaultTransition{SimTime{200}, 0, false}));
  EXPECT_EQ(net.active_faults(SimTime{150}), std::vector<std::size_t>{0});
  EXPECT_TRUE(net.active_faults(SimTime{200}).empty());
  EXPECT_TRUE(net.active_faults(SimTime{99}).empty());
}

TEST(FaultSchedule, OverlapsAllowedAndEndsSortBeforeStarts) {
  RngRegistry rng(1);
  ChaosNet net({5, 0, false}, 4, 0, rng);
  auto tr = net.set_fault_schedule({delay_fault(SimTime{100}, SimTime{300}, 100, 0),
                                    loss_fault(SimTime{200}, SimTime{300}, 0.15),
                                    loss_fault(SimTime{300}, SimTime{400}, 0.15)});
  EXPECT_EQ(net.active_faults(SimTime{250}), (std::vector<std::size_t>{0, 1}));
  // At t=300 both earlier windows close before the third opens.
  std::vector<bool> at300;
  for (const auto& t : tr) {
    if (t.at == SimTime{300}) at300.push_back(t.starts);
  }
  EXPECT_EQ(at300, (std::vector<bool>{false, false, true}));
}

TEST(FaultSchedule, MalformedWindows) {
  RngRegistry rng(1);
  ChaosNet net({5, 0, false}, 4, 0, rng);
  EXPECT_THROW(net.set_fault_schedule({loss_fault(SimTime{200}, SimTime{200}, 0.1)}), MalformedWindow);
  EXPECT_THROW(net.set_fault_schedule({loss_fault(SimTime{300}, SimTime{200}, 0.1)}), MalformedWindow);
  EXPECT_THROW(net.set_fault_schedule({loss_fault(SimTime{0}, SimTime{200}, 1.5)}), MalformedWindow);
  EXPECT_THROW(net.set_fault_schedule({pause_fault(SimTime{0}, SimTime{200}, {})}), MalformedWindow);
  EXPECT_THROW(net.set_fault_schedule({pause_fault(SimTime{0}, SimTime{200}, {9})}), UnknownNode);
}

TEST(Corrupt, PrepareDigestChanges) {
  const Payload in = msg::Prepare{0, 3, 0x1234};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RngStream s(seed, "net.corrupt");
    auto out = corrupt_payload(in, s);
    EXPECT_NE(out.payload, in);
    EXPECT_EQ(out.payload.index(), in.index());
  }
}

TEST(Corrupt, SameStreamStateSameOutput) {
  Block b;
  b.height = 4;
  b.proposer = 2;
  b.txs = {Transaction{1, 0, 1, 5, SimTime{}}, Transaction{2, 1, 2, 7, SimTime{}}};
  b.digest = compute_digest(b);
  const Payload in = msg::PrePrepare{1, 4, b.digest, b};
  RngStream a(5, "net.corrupt");
  RngStream c(5, "net.corrupt");
  for (int i = 0; i < 50; ++i) {
    auto x = corrupt_payload(in, a);
    auto y = corrupt_payload(in, c);
    EXPECT_EQ(x.payload, y.payload);
    EXPECT_EQ(x.field, y.field);
  }
}

TEST(Corrupt, ManyFieldsAreChosen) {
  Block b;
  b.height = 9;
  b.txs = {Transaction{1, 0, 1, 5, SimTime{}}};
  b.digest = compute_digest(b);
  const std::vector<Payload> payloads = {
      msg::PrePrepare{0, 9, b.digest, b}, msg::Prepare{0, 9, b.digest}, msg::Commit{2, 9, b.digest},
      msg::AppendEntries{3, 4, 2, {msg::LogEntry{3, b}}, 4},     msg::NewBlock{b},
      msg::ClientSubmit{Transaction{7, 1, 2, 3, SimTime{}}, 1}};
  RngStream s(17, "net.corrupt");
  std::set<std::string> fields;
  for (int i = 0; i < 1000; ++i) {
    const auto& p = payloads[static_cast<std::size_t>(i) % payloads.size()];
    auto out = corrupt_payload(p, s);
    ASSERT_NE(out.payload, p);
    fields.insert(out.field);
  }
  EXPECT_GE(fields.size(), 2u);
}

TEST(Corrupt, EveryPayloadTypeChanges) {
  Block b;
  b.height = 2;
  b.txs = {Transaction{1, 0, 1, 5, SimTime{}}};
  b.digest = compute_digest(b);
  msg::ViewChange vc;
  vc.new_view = 2;
  vc.head = b;
  const std::vector<Payload> all = {msg::ClientSubmit{Transaction{7, 1, 2, 3, SimTime{}}, 1},
                                    msg::Receipt{7, true},
                                    msg::TxForward{Transaction{7, 1, 2, 3, SimTime{}}, 8},
                                    msg::PrePrepare{0, 2, b.digest, b},
                                    msg::Prepare{0, 2, b.digest},
                                    msg::Commit{0, 2, b.digest},
                                    vc,
                                    msg::NewView{2, 2},
                                    msg::SyncRequest{1},
                                    msg::SyncResponse{1, {b}},
                                    msg::RequestVote{2, 1, 1},
                                    msg::VoteResponse{2, true},
                                    msg::AppendEntries{2, 0, 0, {msg::LogEntry{2, b}}, 0},
                                    msg::AppendResponse{2, true, 1},
                                    msg::NewBlock{b},
                                    msg::BlockRequest{1},
                                    msg::BlockResponse{{b}}};
  RngStream s(3, "net.corrupt");
  for (const auto& p : all) {
    for (int i = 0; i < 20; ++i) EXPECT_NE(corrupt_payload(p, s).payload, p) << payload_name(p);
  }
}

}  // namespace
}  // namespace chaosbft
