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
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "chaosbft/ledger/account_state.hpp"
#include "chaosbft/ledger/block.hpp"

namespace chaosbft {

enum class InvalidReason {
  None,
  DigestMismatch,
  HeightMismatch,
  ParentMismatch,
  UnauthorizedProposer,
  TxRejected,
  DuplicateTx,
};

constexpr std::string_view to_string(InvalidReason r) {
  switch (r) {
    case InvalidReason::None: return "Valid";
    case InvalidReason::DigestMismatch: return "DigestMismatch";
    case InvalidReason::HeightMismatch: return "HeightMismatch";
    case InvalidReason::ParentMismatch: return "ParentMismatch";
    case InvalidReason::UnauthorizedProposer: return "UnauthorizedProposer";
    case InvalidReason::TxRejected: return "TxRejected";
    case InvalidReason::DuplicateTx: return "DuplicateTx";
  }
  return "Unknown";
}

struct Validity {
  InvalidReason reason = InvalidReason::None;

  bool valid() const { return reason == InvalidReason::None; }
  explicit operator bool() const { return valid(); }
  bool operator==(const Validity&) const = default;
};

/// The engine's rule for who may propose a given block.
using ProposerRule = std::function<bool(const Block&)>;

/// Checks `b` as a child of `parent` on top of `state`. `seen_tx` reports
/// transaction ids already on the branch. Any in-flight rewrite surfaces as
/// DigestMismatch before the structural checks run.
template <class SeenTx>
Validity validate_block(const Block& b, const Block& parent, const AccountState& state, SeenTx&& seen_tx,
                        const ProposerRule& rule = {}) {
  if (!digest_intact(b)) return {InvalidReason::DigestMismatch};
  if (b.height != parent.height + 1) return {InvalidReason::HeightMismatch};
  if (b.parent != parent.digest) return {InvalidReason::ParentMismatch};
  if (rule && !rule(b)) return {InvalidReason::UnauthorizedProposer};
  StateOverlay overlay(state);
  std::unordered_set<TxId> in_block;
  for (const auto& tx : b.txs) {
    if (!in_block.insert(tx.id).second || seen_tx(tx.id)) return {InvalidReason::DuplicateTx};
    if (overlay.try_apply(tx)) return {InvalidReason::TxRejected};
  }
  return {};
}

struct CommittedBlock {
  Block block;
  SimTime committed_at;
};

/// One node's committed chain plus the account state it implies.
class Chain {
 public:
  explicit Chain(AccountState genesis_state)
      : genesis_state_(genesis_state), state_(std::move(genesis_state)) {
    blocks_.push_back({genesis_block(), SimTime{}});
  }

  const Block& head() const { return blocks_.back().block; }
  std::uint64_t height() const { return head().height; }
  const Block& at(std::uint64_t h) const { return blocks_.at(h).block; }
  const std::vector<CommittedBlock>& blocks() const { return blocks_; }
  const AccountState& state() const { return state_; }
  const AccountState& genesis_state() const { return genesis_state_; }
  bool contains_tx(TxId id) const { return committed_tx_.count(id) != 0; }

  Validity validate(const Block& b, const ProposerRule& rule = {}) const {
    return validate_block(b, head(), state_, [this](TxId id) { return contains_tx(id); }, rule);
  }

  /// Appends a block already known to be valid. Re-checks it anyway: a
  /// commit that fails validation is a bug in the calling engine.
  void commit(const Block& b, SimTime now, const ProposerRule& rule = {}) {
    if (auto v = validate(b, rule); !v) {
      throw std::logic_error("commit of invalid block at height " + std::to_string(b.height) + ": " +
                             std::string(to_string(v.reason)));
    }
    for (const auto& tx : b.txs) {
      state_.try_apply(tx);
      committed_tx_.insert(tx.id);
    }
    if (state_.balance_sum() != state_.total_supply()) throw std::logic_error("conservation violated");
    blocks_.push_back({b, now});
  }

  /// Re-applies every committed transaction to the genesis state.
  AccountState replay() const {
    AccountState s = genesis_state_;
    for (const auto& cb : blocks_) {
      for (const auto& tx : cb.block.txs) s = apply_transaction(std::move(s), tx);
    }
    return s;
  }

 private:
  AccountState genesis_state_;
  AccountState state_;
  std::vector<CommittedBlock> blocks_;
  std::unordered_set<TxId> committed_tx_;
};

inline Validity validate_block(const Block& b, const Chain& chain, const ProposerRule& rule = {}) {
  return chain.validate(b, rule);
}

/// FIFO of pending transactions with O(log n) removal by id.
class TxPool {
 public:
  struct Entry {
    Transaction tx;
    SimTime arrived;
  };

  bool push(const Transaction& tx, SimTime now) {
    if (index_.count(tx.id)) return false;
    index_.emplace(tx.id, next_);
    entries_.emplace(next_++, Entry{tx, now});
    return true;
  }

  bool contains(TxId id) const { return index_.count(id) != 0; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::optional<SimTime> oldest_arrival() const {
    if (entries_.empty()) return std::nullopt;
    return entries_.begin()->second.arrived;
  }

  bool erase(TxId id) {
    auto it = index_.find(id);
    if (it == index_.end()) return false;
    entries_.erase(it->second);
    index_.erase(it);
    return true;
  }

  void erase_block(const Block& b) {
    for (const auto& tx : b.txs) erase(tx.id);
  }

  /// Visits entries in arrival order until `fn` returns false.
  template <class Fn>
  void scan(Fn&& fn) const {
    for (const auto& [seq, e] : entries_) {
      if (!fn(e)) return;
    }
  }

  std::vector<Transaction> drain() {
    std::vector<Transaction> out;
    out.reserve(entries_.size());
    for (auto& [seq, e] : entries_) out.push_back(e.tx);
    entries_.clear();
    index_.clear();
    return out;
  }

 private:
  std::map<std::uint64_t, Entry> entries_;
  std::unordered_map<TxId, std::uint64_t> index_;
  std::uint64_t next_ = 0;
};

struct AssemblyRules {
  std::size_t block_size = 10;
  bool allow_empty = false;
  /// When set, transactions that do not apply on top of this state are
  /// pulled from the pool and reported instead of being included.
  const AccountState* state = nullptr;
  /// Transactions for which this returns true stay in the pool untouched
  /// (e.g. already included in an unconfirmed ancestor).
  std::function<bool(TxId)> skip;
};

struct Assembly {
  /// Empty only when every candidate was rejected.
  std::optional<Block> block;
  std::vector<Transaction> rejected;
};

/// Cuts up to block_size transactions from the pool in FIFO order into a
/// child of `parent`.
inline Assembly assemble_block(TxPool& pool, const Block& parent, NodeId proposer, SimTime now,
                               const AssemblyRules& rules) {
  Assembly out;
  Block b;
  std::vector<TxId> taken;
  std::optional<StateOverlay> overlay;
  if (rules.state) overlay.emplace(*rules.state);
  pool.scan([&](const TxPool::Entry& e) {
    if (b.txs.size() >= rules.block_size) return false;
    if (rules.skip && rules.skip(e.tx.id)) return true;
    taken.push_back(e.tx.id);
    if (overlay && overlay->try_apply(e.tx)) {
      out.rejected.push_back(e.tx);
    } else {
      b.txs.push_back(e.tx);
    }
    return true;
  });
  for (TxId id : taken) pool.erase(id);
  if (b.txs.empty() && !rules.allow_empty) {
    if (out.rejected.empty()) throw LedgerError(LedgerErrc::EmptyProposalForbidden);
    return out;
  }
  b.height = parent.height + 1;
  b.parent = parent.digest;
  b.proposer = proposer;
  b.proposed_at = now;
  b.digest = compute_digest(b);
  out.block = std::move(b);
  return out;
}

inline Block assemble_block(TxPool& pool, const Block& parent, NodeId proposer, SimTime now,
                            std::size_t block_size, bool allow_empty = false) {
  AssemblyRules rules;
  rules.block_size = block_size;
  rules.allow_empty = allow_empty;
  return *assemble_block(pool, parent, proposer, now, rules).block;
}

}  // namespace chaosbft
