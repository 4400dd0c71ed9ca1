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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "chaosbft/engine/engine.hpp"
#include "chaosbft/sim/rng.hpp"

namespace chaosbft {

enum class RaftRole { Follower, Candidate, Leader };

constexpr std::string_view to_string(RaftRole r) {
  switch (r) {
    case RaftRole::Follower: return "Follower";
    case RaftRole::Candidate: return "Candidate";
    case RaftRole::Leader: return "Leader";
  }
  return "Unknown";
}

/// Raft with blocks as log entries: log index i holds the block at height i.
/// Crash tolerant only; a tampered entry is refused but a lying peer is not
/// detected.
class RaftEngine : public Engine {
 public:
  explicit RaftEngine(EngineContext ctx)
      : Engine(std::move(ctx)), rng_(ctx_.seed, "engine." + std::to_string(ctx_.self)) {}

  Protocol protocol() const override { return Protocol::Raft; }

  RaftRole role() const { return role_; }
  std::uint64_t term() const { return term_; }
  std::optional<NodeId> voted_for() const { return voted_for_; }
  std::optional<NodeId> leader() const { return leader_; }
  std::uint64_t commit_index() const { return commit_index_; }
  std::uint64_t last_index() const { return log_.size(); }
  std::uint64_t last_term() const { return log_.empty() ? 0 : log_.back().term; }
  const std::vector<msg::LogEntry>& log() const { return log_; }
  std::uint64_t term_at(std::uint64_t index) const { return index == 0 ? 0 : log_.at(index - 1).term; }

  Actions start(SimTime now) override {
    Actions out;
    arm_election(out, now);
    return out;
  }

  /// Appends a block as leader and starts replicating it.
  Actions replicate(const Block& block, SimTime) {
    if (role_ != RaftRole::Leader) throw NotLeader("node " + std::to_string(self()) + " is not leader");
    Actions out;
    append_own(out, block, true);
    broadcast_append(out);
    return out;
  }

  Actions on_message(const Message& m, SimTime now) override {
    Actions out;
    if (!validators().contains(m.src) && !std::holds_alternative<msg::ClientSubmit>(m.payload)) {
      trace(out, "Malformed", "from=" + std::to_string(m.src) + ";reason=unknown-sender");
      return out;
    }
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, msg::ClientSubmit>) {
            on_tx(out, p.tx, m.src, now, false);
          } else if constexpr (std::is_same_v<T, msg::TxForward>) {
            on_tx(out, p.tx, p.client, now, true);
          } else if constexpr (std::is_same_v<T, msg::RequestVote>) {
            on_request_vote(out, m.src, p, now);
          } else if constexpr (std::is_same_v<T, msg::VoteResponse>) {
            on_vote(out, m.src, p, now);
          } else if constexpr (std::is_same_v<T, msg::AppendEntries>) {
            on_append(out, m.src, p, now);
          } else if constexpr (std::is_same_v<T, msg::AppendResponse>) {
            on_append_response(out, m.src, p, now);
          } else {
            trace(out, "Malformed", "from=" + std::to_string(m.src) + ";reason=foreign-payload");
          }
        },
        m.payload);
    return out;
  }

  Actions on_timer(const std::string& label, SimTime now) override {
    Actions out;
    if (label == "election") {
      if (role_ != RaftRole::Leader) start_election(out, now);
    } else if (label == "heartbeat") {
      if (role_ == RaftRole::Leader) {
        broadcast_append(out);
        set_timer(out, "heartbeat", now + params().raft_heartbeat_ms);
      }
    } else if (label == "block") {
      block_deadline_.reset();
      maybe_propose(out, now);
    }
    return out;
  }

  std::uint64_t fingerprint() const override {
    std::uint64_t h = 0;
    h = detail::mix_fingerprint(h, static_cast<std::uint64_t>(role_));
    h = detail::mix_fingerprint(h, term_);
    h = detail::mix_fingerprint(h, voted_for_ ? *voted_for_ + 1 : 0);
    h = detail::mix_fingerprint(h, commit_index_);
    for (const auto& e : log_) h = detail::mix_fingerprint(h, e.term ^ e.block.digest);
    h = detail::mix_fingerprint(h, pool_.size());
    h = detail::mix_fingerprint(h, rng_.draws());
    return h;
  }

 private:
  std::size_t majority() const { return validators().majority(); }

  void arm_election(Actions& out, SimTime now) {
    const auto& p = params();
    const auto t = rng_.uniform_int(static_cast<std::int64_t>(p.raft_election_min_ms),
                                    static_cast<std::int64_t>(p.raft_election_max_ms));
    set_timer(out, "election", now + static_cast<Millis>(t));
  }

  void step_down(Actions& out, std::uint64_t term, SimTime now) {
    const bool was_leader = role_ == RaftRole::Leader;
    if (term > term_) {
      term_ = term;
      voted_for_.reset();
    }
    role_ = RaftRole::Follower;
    leader_.reset();
    if (was_leader) {
      trace(out, "StepDown", "term=" + std::to_string(term_));
      cancel_timer(out, "heartbeat");
      if (block_deadline_) {
        cancel_timer(out, "block");
        block_deadline_.reset();
      }
      reject_pool(out, "NotLeader");
      arm_election(out, now);
    }
  }

  void start_election(Actions& out, SimTime now) {
    ++term_;
    role_ = RaftRole::Candidate;
    voted_for_ = self();
    leader_.reset();
    votes_ = {self()};
    trace(out, "Election", "term=" + std::to_string(term_));
    broadcast(out, msg::RequestVote{term_, last_index(), last_term()});
    arm_election(out, now);
    if (votes_.size() >= majority()) become_leader(out, now);
  }

  void on_request_vote(Actions& out, NodeId src, const msg::RequestVote& p, SimTime now) {
    if (p.term > term_) step_down(out, p.term, now);
    bool granted = false;
    if (p.term == term_ && (!voted_for_ || *voted_for_ == src)) {
      const bool up_to_date =
          p.last_log_term > last_term() || (p.last_log_term == last_term() && p.last_log_index >= last_index());
      if (up_to_date) {
        granted = true;
        voted_for_ = src;
        arm_election(out, now);
      }
    }
    send(out, src, msg::VoteResponse{term_, granted});
  }

  void on_vote(Actions& out, NodeId src, const msg::VoteResponse& p, SimTime now) {
    if (p.term > term_) {
      step_down(out, p.term, now);
      return;
    }
    if (role_ != RaftRole::Candidate || p.term != term_ || !p.granted) return;
    votes_.insert(src);
    if (votes_.size() >= majority()) become_leader(out, now);
  }

  void become_leader(Actions& out, SimTime now) {
    role_ = RaftRole::Leader;
    leader_ = self();
    trace(out, "Leader", "term=" + std::to_string(term_));
    next_index_.clear();
    match_index_.clear();
    for (NodeId n : validators().members()) {
      if (n == self()) continue;
      next_index_[n] = last_index() + 1;
      match_index_[n] = 0;
    }
    cancel_timer(out, "election");
    broadcast_append(out);
    set_timer(out, "heartbeat", now + params().raft_heartbeat_ms);
    maybe_propose(out, now);
  }

  // --- client transactions ------------------------------------------------

  void on_tx(Actions& out, const Transaction& tx, NodeId client, SimTime now, bool forwarded) {
    if (chain_.contains_tx(tx.id) || in_log_.count(tx.id)) return;
    if (role_ == RaftRole::Leader) {
      clients_[tx.id] = client;
      if (pool_.push(tx, now)) maybe_propose(out, now);
      return;
    }
    if (!forwarded && leader_ && *leader_ != self()) {
      send(out, *leader_, msg::TxForward{tx, client});
      return;
    }
    out.push_back(act::RejectTx{tx.id, client, "NoLeader"});
  }

  void reject_pool(Actions& out, const char* reason) {
    for (const auto& tx : pool_.drain()) {
      auto c = clients_.find(tx.id);
      if (c != clients_.end()) out.push_back(act::RejectTx{tx.id, c->second, reason});
    }
    clients_.clear();
  }

  bool current_term_entry_uncommitted() const {
    for (std::uint64_t i = commit_index_ + 1; i <= last_index(); ++i) {
      if (term_at(i) == term_) return true;
    }
    return false;
  }

  void maybe_propose(Actions& out, SimTime now) {
    if (role_ != RaftRole::Leader || current_term_entry_uncommitted()) return;
    const auto& p = params();
    if (pool_.empty() && !p.empty_blocks) return;
    if (pool_.empty()) {
      const SimTime at = chain_.blocks().back().committed_at + p.block_interval_ms;
      if (now < at) {
        arm_block_timer(out, at);
        return;
      }
    } else if (pool_.size() < p.block_size && now - *pool_.oldest_arrival() < p.block_interval_ms) {
      arm_block_timer(out, *pool_.oldest_arrival() + p.block_interval_ms);
      return;
    }
    // Uncommitted entries from earlier terms still sit between the chain
    // head and the new block; build on top of them.
    AccountState state = chain_.state();
    const Block* parent = &chain_.head();
    for (std::uint64_t i = commit_index_ + 1; i <= last_index(); ++i) {
      for (const auto& tx : log_[i - 1].block.txs) state.try_apply(tx);
      parent = &log_[i - 1].block;
    }
    AssemblyRules rules;
    rules.block_size = p.block_size;
    rules.allow_empty = p.empty_blocks;
    rules.state = &state;
    rules.skip = [this](TxId id) { return chain_.contains_tx(id) || in_log_.count(id) != 0; };
    Assembly a = assemble_block(pool_, *parent, self(), now, rules);
    for (const auto& tx : a.rejected) {
      auto c = clients_.find(tx.id);
      if (c != clients_.end()) out.push_back(act::RejectTx{tx.id, c->second, "InsufficientFunds"});
    }
    if (!a.block) {
      if (!pool_.empty()) maybe_propose(out, now);
      return;
    }
    append_own(out, *a.block, true);
    broadcast_append(out);
  }

  void arm_block_timer(Actions& out, SimTime at) {
    if (block_deadline_ == at) return;
    block_deadline_ = at;
    set_timer(out, "block", at);
  }

  void append_own(Actions& out, const Block& b, bool fresh) {
    log_.push_back(msg::LogEntry{term_, b});
    for (const auto& tx : b.txs) {
      in_log_.insert(tx.id);
      pool_.erase(tx.id);
    }
    if (fresh) out.push_back(act::ProposalCreated{b});
    trace(out, "Propose", "term=" + std::to_string(term_) + ";height=" + std::to_string(b.height) +
                              ";digest=" + hex_digest(b.digest));
    if (block_deadline_) {
      cancel_timer(out, "block");
      block_deadline_.reset();
    }
    // A single-node cluster commits on its own.
    if (validators().size() == 1) advance_commit(out, b.proposed_at);
  }

  // --- replication --------------------------------------------------------

  static constexpr std::uint64_t kMaxEntriesPerAppend = 16;

  msg::AppendEntries make_append(NodeId peer) const {
    msg::AppendEntries a;
    a.term = term_;
    const std::uint64_t next = next_index_.at(peer);
    a.prev_index = next - 1;
    a.prev_term = term_at(a.prev_index);
    for (std::uint64_t i = next; i <= last_index() && a.entries.size() < kMaxEntriesPerAppend; ++i) {
      a.entries.push_back(log_[i - 1]);
    }
    a.leader_commit = commit_index_;
    return a;
  }

  void broadcast_append(Actions& out) {
    for (const auto& [peer, next] : next_index_) send(out, peer, make_append(peer));
  }

  void on_append(Actions& out, NodeId src, const msg::AppendEntries& p, SimTime now) {
    if (p.term < term_) {
      send(out, src, msg::AppendResponse{term_, false, 0});
      return;
    }
    if (p.term > term_ || role_ != RaftRole::Follower) step_down(out, p.term, now);
    leader_ = src;
    arm_election(out, now);
    for (const auto& e : p.entries) {
      if (!digest_intact(e.block)) {
        trace(out, "Malformed", "from=" + std::to_string(src) + ";reason=entry-digest");
        return;
      }
    }
    if (p.prev_index > last_index() || term_at(p.prev_index) != p.prev_term) {
      send(out, src, msg::AppendResponse{term_, false, std::min(last_index(), p.prev_index > 0 ? p.prev_index - 1 : 0)});
      return;
    }
    std::uint64_t index = p.prev_index;
    for (const auto& e : p.entries) {
      ++index;
      if (index <= last_index()) {
        if (term_at(index) == e.term) continue;
        if (index <= commit_index_) {
          trace(out, "Conflict", "index=" + std::to_string(index) + ";reason=committed-entry");
          return;
        }
        truncate(index);
      }
      log_.push_back(e);
      for (const auto& tx : e.block.txs) in_log_.insert(tx.id);
    }
    const std::uint64_t last_new = p.prev_index + p.entries.size();
    if (p.leader_commit > commit_index_) apply_commits(out, std::min(p.leader_commit, last_new), now);
    send(out, src, msg::AppendResponse{term_, true, last_new});
  }

  void truncate(std::uint64_t from) {
    while (last_index() >= from) {
      for (const auto& tx : log_.back().block.txs) in_log_.erase(tx.id);
      log_.pop_back();
    }
  }

  void on_append_response(Actions& out, NodeId src, const msg::AppendResponse& p, SimTime now) {
    if (p.term > term_) {
      step_down(out, p.term, now);
      return;
    }
    if (role_ != RaftRole::Leader || p.term != term_ || !next_index_.count(src)) return;
    if (p.success) {
      const std::uint64_t match = std::min(p.match_index, last_index());
      // Only an ack that moves the follower forward earns a follow-up;
      // duplicates would otherwise each keep their own exchange alive.
      const bool progressed = match > match_index_[src];
      if (progressed) match_index_[src] = match;
      next_index_[src] = std::max(next_index_[src], match + 1);
      advance_commit(out, now);
      if (progressed && next_index_[src] <= last_index()) send(out, src, make_append(src));
    } else {
      const std::uint64_t hint = std::min(p.match_index + 1, next_index_[src] > 1 ? next_index_[src] - 1 : 1);
      next_index_[src] = std::max<std::uint64_t>(1, hint);
      send(out, src, make_append(src));
    }
  }

  void advance_commit(Actions& out, SimTime now) {
    std::uint64_t n = commit_index_;
    for (std::uint64_t i = last_index(); i > commit_index_; --i) {
      if (term_at(i) != term_) break;
      std::size_t count = 1;
      for (const auto& [peer, m] : match_index_) {
        if (m >= i) ++count;
      }
      if (count >= majority()) {
        n = i;
        break;
      }
    }
    if (n == commit_index_) return;
    apply_commits(out, n, now);
    // Spread the new commit index at once rather than at the next heartbeat.
    broadcast_append(out);
    maybe_propose(out, now);
  }

  void apply_commits(Actions& out, std::uint64_t upto, SimTime now) {
    while (commit_index_ < upto) {
      const Block& b = log_[commit_index_].block;
      if (auto v = chain_.validate(b, any_validator()); !v) {
        trace(out, "Reject", "height=" + std::to_string(b.height) + ";digest=" + hex_digest(b.digest) +
                                 ";reason=" + std::string(to_string(v.reason)));
        return;
      }
      ++commit_index_;
      commit(out, b, now);
      for (const auto& tx : b.txs) {
        in_log_.erase(tx.id);
        clients_.erase(tx.id);
      }
    }
  }

  RngStream rng_;
  RaftRole role_ = RaftRole::Follower;
  std::uint64_t term_ = 0;
  std::optional<NodeId> voted_for_;
  std::optional<NodeId> leader_;
  std::set<NodeId> votes_;
  std::vector<msg::LogEntry> log_;
  std::uint64_t commit_index_ = 0;
  std::map<NodeId, std::uint64_t> next_index_;
  std::map<NodeId, std::uint64_t> match_index_;
  std::unordered_set<TxId> in_log_;

  TxPool pool_;
  std::map<TxId, NodeId> clients_;
  std::optional<SimTime> block_deadline_;
};

}  // namespace chaosbft
