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
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "chaosbft/ledger/account_state.hpp"
#include "chaosbft/ledger/block.hpp"
#include "chaosbft/ledger/chain.hpp"
#include "chaosbft/net/message.hpp"
#include "chaosbft/sim/time.hpp"

namespace chaosbft {

enum class Protocol { Pbft, Raft, Clique };

constexpr std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::Pbft: return "pbft";
    case Protocol::Raft: return "raft";
    case Protocol::Clique: return "clique";
  }
  return "unknown";
}

inline std::optional<Protocol> parse_protocol(std::string_view s) {
  if (s == "pbft") return Protocol::Pbft;
  if (s == "raft") return Protocol::Raft;
  if (s == "clique") return Protocol::Clique;
  return std::nullopt;
}

/// Static membership, validators 0..n-1 in index order.
class ValidatorSet {
 public:
  explicit ValidatorSet(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) members_.push_back(static_cast<NodeId>(i));
  }
  explicit ValidatorSet(std::vector<NodeId> members) : members_(std::move(members)) {}

  std::size_t size() const { return members_.size(); }
  NodeId at(std::size_t i) const { return members_.at(i); }
  const std::vector<NodeId>& members() const { return members_; }
  bool contains(NodeId n) const { return std::find(members_.begin(), members_.end(), n) != members_.end(); }

  /// Byzantine faults tolerated: floor((n-1)/3).
  std::size_t f() const { return members_.empty() ? 0 : (members_.size() - 1) / 3; }

  /// Smallest q with 2q - n >= f + 1, i.e. ceil((n + f + 1) / 2). Any two
  /// such sets share at least f+1 members. Equals 2f+1 when n = 3f+1.
  std::size_t bft_quorum() const { return (size() + f() + 2) / 2; }

  std::size_t majority() const { return size() / 2 + 1; }

 private:
  std::vector<NodeId> members_;
};

struct EngineParams {
  std::size_t block_size = 10;
  Millis block_interval_ms = 500;
  bool empty_blocks = false;
  Millis sync_retry_ms = 200;

  Millis pbft_view_timeout_ms = 2000;

  Millis raft_election_min_ms = 600;
  Millis raft_election_max_ms = 1200;
  Millis raft_heartbeat_ms = 150;

  Millis clique_period_ms = 1000;
  std::uint64_t clique_confirmation_depth = 2;
  Millis clique_backoff_unit_ms = 500;
  Millis clique_min_backoff_ms = 50;
};

struct EngineContext {
  NodeId self = 0;
  ValidatorSet validators{0};
  EngineParams params;
  AccountState genesis;
  std::uint64_t seed = 0;
};

namespace act {

struct Send {
  NodeId dst = 0;
  Payload payload;
};
/// To every other validator.
struct Broadcast {
  Payload payload;
};
struct CommitBlock {
  Block block;
};
/// Replaces any pending timer with the same label.
struct SetTimer {
  std::string label;
  SimTime fire_at;
};
struct CancelTimer {
  std::string label;
};
struct ProposalCreated {
  Block block;
};
/// The transaction will not be ordered; the runner answers the client.
struct RejectTx {
  TxId tx = 0;
  NodeId client = 0;
  std::string reason;
};
/// Protocol milestones for the log (elections, view changes, rejects).
struct Trace {
  std::string kind;
  std::string detail;
};

}  // namespace act

using Action = std::variant<act::Send, act::Broadcast, act::CommitBlock, act::SetTimer, act::CancelTimer,
                            act::ProposalCreated, act::RejectTx, act::Trace>;
using Actions = std::vector<Action>;

class NotPrimary : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};
class NotLeader : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};
class NotAuthorizedSigner : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};
class RecentlySigned : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// One validator's protocol state machine. All effects leave as actions;
/// the engine never touches the network or the clock. Given the same
/// context and the same inbound sequence it reaches the same state.
class Engine {
 public:
  explicit Engine(EngineContext ctx) : ctx_(std::move(ctx)), chain_(ctx_.genesis) {}
  virtual ~Engine() = default;

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  NodeId self() const { return ctx_.self; }
  const EngineContext& context() const { return ctx_; }
  const Chain& ledger() const { return chain_; }

  virtual Protocol protocol() const = 0;
  virtual Actions start(SimTime now) = 0;
  /// Client submissions arrive here too, as ClientSubmit from a client node.
  virtual Actions on_message(const Message& m, SimTime now) = 0;
  virtual Actions on_timer(const std::string& label, SimTime now) = 0;
  /// Digest of the protocol state, for replay comparisons.
  virtual std::uint64_t fingerprint() const = 0;

 protected:
  static void trace(Actions& out, std::string kind, std::string detail) {
    out.push_back(act::Trace{std::move(kind), std::move(detail)});
  }
  static void broadcast(Actions& out, Payload p) { out.push_back(act::Broadcast{std::move(p)}); }
  static void send(Actions& out, NodeId dst, Payload p) { out.push_back(act::Send{dst, std::move(p)}); }
  static void set_timer(Actions& out, std::string label, SimTime at) {
    out.push_back(act::SetTimer{std::move(label), at});
  }
  static void cancel_timer(Actions& out, std::string label) { out.push_back(act::CancelTimer{std::move(label)}); }

  /// Appends to the local chain and reports it. Callers have validated.
  void commit(Actions& out, const Block& b, SimTime now) {
    chain_.commit(b, now);
    out.push_back(act::CommitBlock{b});
  }

  const ValidatorSet& validators() const { return ctx_.validators; }
  const EngineParams& params() const { return ctx_.params; }
  Chain& chain() { return chain_; }

  ProposerRule any_validator() const {
    return [this](const Block& b) { return ctx_.validators.contains(b.proposer); };
  }

  EngineContext ctx_;
  Chain chain_;
};

namespace detail {

inline std::uint64_t mix_fingerprint(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

}  // namespace detail

}  // namespace chaosbft
