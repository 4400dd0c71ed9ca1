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
#include <vector>

#include <gtest/gtest.h>

#include "chaosbft/net/corrupt.hpp"
#include "cluster.hpp"

namespace chaosbft {
namespace {

using testing::Cluster;

EngineContext ctx(NodeId self, std::size_t n) {
  EngineContext c;
  c.self = self;
  c.validators = ValidatorSet(n);
  c.genesis.create_account(0, 100);
  c.genesis.create_account(1, 100);
  return c;
}

Message from(NodeId src, NodeId dst, Payload p) {
  Message m;
  m.src = src;
  m.dst = dst;
  m.payload = std::move(p);
  return m;
}

Block block_on(const Block& parent, NodeId proposer, TxId tx) {
  Block b;
  b.height = parent.height + 1;
  b.parent = parent.digest;
  b.proposer = proposer;
  b.txs = {Transaction{tx, 0, 1, 1, SimTime{}}};
  b.digest = compute_digest(b);
  return b;
}

/// Keeps every pool full for `ms` by submitting to each node.
void saturate(Cluster& c, TxId& id, int count) {
  for (int i = 0; i < count; ++i) {
    c.submit(static_cast<NodeId>(i % c.size()), id, static_cast<AccountId>(id % 8), static_cast<AccountId>(8 + id % 8));
    ++id;
  }
}

bool has_reject(const Actions& out, const std::string& reason) {
  for (const auto& a : out) {
    if (auto* t = std::get_if<act::Trace>(&a)) {
      if (t->kind == "Reject" && t->detail.find("reason=" + reason) != std::string::npos) return true;
    }
  }
  return false;
}

TEST(CliqueSchedule, InTurnIsHeightModN) {
  Cluster c(Protocol::Clique, 6);
  TxId id = 1;
  saturate(c, id, 200);
  c.run_until(SimTime{9000});
  const auto& blocks = c.engine(0).ledger().blocks();
  ASSERT_GE(blocks.size(), 7u);
  for (std::uint64_t h = 1; h <= 6; ++h) {
    EXPECT_EQ(blocks[h].block.proposer, h % 6) << "height " << h;
    EXPECT_EQ(blocks[h].block.proposed_at, SimTime{1000 * h}) << "height " << h;
  }
  EXPECT_EQ(c.count_traces("Reorg"), 0u);
}

TEST(CliqueSchedule, RecentSignerCannotSeal) {
  Cluster c(Protocol::Clique, 6);
  TxId id = 1;
  saturate(c, id, 50);
  c.run_until(SimTime{1500});
  auto& signer1 = c.as<CliqueEngine>(1);
  ASSERT_EQ(signer1.head().proposer, 1u);
  EXPECT_THROW(signer1.propose_now(c.now()), RecentlySigned);
  EXPECT_EQ(signer1.recent_window(), 3u);
}

TEST(CliqueSchedule, OutsiderIsNotASigner) {
  EngineContext x = ctx(9, 6);
  CliqueEngine e(std::move(x));
  EXPECT_THROW(e.propose_now(SimTime{}), NotAuthorizedSigner);
}

TEST(CliqueSchedule, PausedInTurnSignerIsCovered) {
  Cluster c(Protocol::Clique, 6);
  TxId id = 1;
  saturate(c, id, 300);
  c.pause(2);
  c.run_until(SimTime{30'000});
  const auto& blocks = c.engine(0).ledger().blocks();
  ASSERT_GE(blocks.size(), 10u);
  for (std::size_t h = 2; h < blocks.size(); ++h) {
    const auto gap = blocks[h].block.proposed_at - blocks[h - 1].block.proposed_at;
    EXPECT_LT(gap, 1000u + 500u * 6) << "height " << h;
    EXPECT_NE(blocks[h].block.proposer, 2u);
  }
}

TEST(CliqueAccept, InTurnBeatsOutOfTurnInEitherOrder) {
  const Block g = genesis_block();
  const Block in = block_on(g, 1, 1);
  const Block out = block_on(g, 2, 2);
  for (bool in_first : {true, false}) {
    CliqueEngine e(ctx(4, 6));
    e.start(SimTime{});
    if (in_first) {
      e.on_message(from(1, 4, msg::NewBlock{in}), SimTime{1000});
      e.on_message(from(2, 4, msg::NewBlock{out}), SimTime{1001});
    } else {
      e.on_message(from(2, 4, msg::NewBlock{out}), SimTime{1000});
      e.on_message(from(1, 4, msg::NewBlock{in}), SimTime{1001});
    }
    EXPECT_EQ(e.head().digest, in.digest);
    EXPECT_EQ(e.head_weight(), 2u);
  }
}

TEST(CliqueAccept, NonSignerBlockIsRejected) {
  CliqueEngine e(ctx(4, 6));
  e.start(SimTime{});
  auto out = e.on_message(from(1, 4, msg::NewBlock{block_on(genesis_block(), 9, 1)}), SimTime{1000});
  EXPECT_TRUE(has_reject(out, "UnauthorizedProposer"));
  EXPECT_EQ(e.head().height, 0u);
}

TEST(CliqueAccept, CorruptedBlockIsRejected) {
  CliqueEngine e(ctx(4, 6));
  e.start(SimTime{});
  Block b = block_on(genesis_block(), 1, 1);
  b.digest ^= 0x10;
  auto out = e.on_message(from(1, 4, msg::NewBlock{b}), SimTime{1000});
  EXPECT_TRUE(has_reject(out, "DigestMismatch"));
  EXPECT_EQ(e.head().height, 0u);
}

TEST(CliqueAccept, RecentSignerBlockIsRejected) {
  CliqueEngine e(ctx(4, 6));
  e.start(SimTime{});
  const Block b1 = block_on(genesis_block(), 1, 1);
  const Block b2 = block_on(b1, 1, 2);
  e.on_message(from(1, 4, msg::NewBlock{b1}), SimTime{1000});
  auto out = e.on_message(from(1, 4, msg::NewBlock{b2}), SimTime{2000});
  EXPECT_TRUE(has_reject(out, "RecentlySigned"));
  EXPECT_EQ(e.head().digest, b1.digest);
}

TEST(CliqueCluster, OneBroadcastPerBlock) {
  Cluster c(Protocol::Clique, 6);
  TxId id = 1;
  saturate(c, id, 300);
  c.run_until(SimTime{20'500});
  const auto blocks = c.proposals.size();
  ASSERT_GT(blocks, 0u);
  EXPECT_EQ(c.sent_by_type["NewBlock"], blocks * 5);
}

// Block size 10 and a 1000 ms period cap throughput at 10 tx/s.
TEST(CliqueCluster, ThroughputCeiling) {
  Cluster c(Protocol::Clique, 6);
  TxId id = 1;
  for (int s = 0; s < 60; ++s) {
    saturate(c, id, 20);
    c.run_until(c.now() + 1000);
  }
  std::uint64_t txs = 0;
  for (const auto& b : c.engine(0).ledger().blocks()) {
    if (b.committed_at >= SimTime{10'000} && b.committed_at < SimTime{60'000}) txs += b.block.txs.size();
  }
  const double tps = static_cast<double>(txs) / 50.0;
  EXPECT_LE(tps, 10.0 * 1.05);
  EXPECT_GE(tps, 10.0 * 0.95);
}

// Random drops and pauses; afterwards every honest head agrees within two
// confirmation depths of block periods, and every run of n/2+1 committed
// blocks has distinct proposers.
TEST(CliqueCluster, ConvergenceAndRecentSigners) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Cluster c(Protocol::Clique, 6, {}, seed);
    RngStream chaos(seed, "test.chaos");
    bool faulty = true;
    c.set_hook([&](Message&, SimTime) -> std::optional<Millis> {
      if (faulty && chaos.bernoulli(0.2)) return std::nullopt;
      return static_cast<Millis>(faulty ? chaos.uniform_int(0, 150) : 0);
    });
    TxId id = 1;
    for (int s = 0; s < 30; ++s) {
      if (s % 10 == 0) {
        for (NodeId i = 0; i < 6; ++i) c.resume(i);
        c.pause(static_cast<NodeId>(chaos.uniform_int(0, 5)));
      }
      saturate(c, id, 12);
      c.run_until(c.now() + 1000);
    }
    for (NodeId i = 0; i < 6; ++i) c.resume(i);
    faulty = false;
    const SimTime end_of_fault = c.now();
    for (int s = 0; s < 4; ++s) {
      saturate(c, id, 12);
      c.run_until(c.now() + 1000);
    }
    ASSERT_EQ(c.now() - end_of_fault, 2u * 2u * 1000u);
    std::set<Digest> heads;
    for (NodeId i = 0; i < 6; ++i) heads.insert(c.as<CliqueEngine>(i).head().digest);
    EXPECT_EQ(heads.size(), 1u) << "seed " << seed;
    EXPECT_TRUE(testing::disagreements(c.commits).empty()) << "seed " << seed;
    const auto& blocks = c.engine(0).ledger().blocks();
    for (std::size_t h = 1; h + 3 < blocks.size(); ++h) {
      std::set<NodeId> who;
      for (std::size_t k = 0; k < 4; ++k) who.insert(blocks[h + k].block.proposer);
      EXPECT_EQ(who.size(), 4u) << "seed " << seed << " height " << h;
    }
  }
}

TEST(CliqueCluster, ReplayReproducesState) {
  auto run = [] {
    Cluster c(Protocol::Clique, 6, {}, 3);
    TxId id = 1;
    saturate(c, id, 100);
    c.pause(1);
    c.run_until(SimTime{12'000});
    std::vector<std::uint64_t> fp;
    for (NodeId i = 0; i < 6; ++i) fp.push_back(c.engine(i).fingerprint());
    return fp;
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace chaosbft
