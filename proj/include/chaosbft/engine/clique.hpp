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
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "chaosbft/engine/engine.hpp"
#include "chaosbft/sim/rng.hpp"

namespace chaosbft {

/// Clique-style proof of authority. Signers take turns by height; anyone
/// else may step in after a random backoff with half the fork weight. A
/// block commits once `confirmation_depth` descendants sit on top of it.
class CliqueEngine : public Engine {
 public:
  explicit CliqueEngine(EngineContext ctx)
      : Engine(std::move(ctx)), rng_(ctx_.seed, "engine." + std::to_string(ctx_.self)) {
    tree_[chain_.head().digest] = Node{chain_.head(), 0};
    head_ = chain_.head().digest;
  }

  Protocol protocol() const override { return Protocol::Clique; }

  NodeId in_turn_signer(std::uint64_t height) const { return validators().at(height % validators().size()); }
  bool in_turn(std::uint64_t height) const { return in_turn_signer(height) == self(); }
  /// How many earlier blocks on a branch a signer must stay out of.
  std::size_t recent_window() const { return validators().size() / 2; }
  const Block& head() const { return tree_.at(head_).block; }
  std::uint64_t head_weight() const { return tree_.at(head_).weight; }
  std::size_t known_blocks() const { return tree_.size(); }
  std::size_t pool_size() const { return pool_.size(); }

  /// True when `signer` appears among the last recent_window() proposers
  /// of the branch ending at `parent`.
  bool recently_signed(NodeId signer, Digest parent) const {
    std::size_t seen = 0;
    for (Digest d = parent; seen < recent_window();) {
      auto it = tree_.find(d);
      if (it == tree_.end() || it->second.block.height == 0) break;
      if (it->second.block.proposer == signer) return true;
      ++seen;
      d = it->second.block.parent;
    }
    return false;
  }

  Actions start(SimTime now) override {
    Actions out;
    schedule_slot(out, now);
    arm_stall(out, now);
    return out;
  }

  /// Seals a block on the current head right now. Throws when this node may
  /// not sign at that height.
  Actions propose_now(SimTime now) {
    if (!validators().contains(self())) throw NotAuthorizedSigner("node " + std::to_string(self()));
    if (recently_signed(self(), head_)) throw RecentlySigned("node " + std::to_string(self()));
    Actions out;
    seal(out, now);
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
            on_tx(out, p.tx, m.src, now, true);
          } else if constexpr (std::is_same_v<T, msg::TxForward>) {
            on_tx(out, p.tx, p.client, now, false);
          } else if constexpr (std::is_same_v<T, msg::NewBlock>) {
            receive_blocks(out, m.src, {p.block}, now);
          } else if constexpr (std::is_same_v<T, msg::BlockRequest>) {
            on_block_request(out, m.src, p);
          } else if constexpr (std::is_same_v<T, msg::BlockResponse>) {
            receive_blocks(out, m.src, p.blocks, now);
            if (p.blocks.size() == kMaxResponse) send(out, m.src, msg::BlockRequest{p.blocks.back().height + 1});
          } else {
            trace(out, "Malformed", "from=" + std::to_string(m.src) + ";reason=foreign-payload");
          }
        },
        m.payload);
    arm_stall(out, now);
    return out;
  }

  Actions on_timer(const std::string& label, SimTime now) override {
    Actions out;
    if (label == "slot") {
      slot_at_.reset();
      if (slot_height_ == head().height + 1) on_slot(out, now);
    } else if (label == "stall") {
      stall_at_.reset();
      on_stall(out, now);
    }
    arm_stall(out, now);
    return out;
  }

  std::uint64_t fingerprint() const override {
    std::uint64_t h = 0;
    h = detail::mix_fingerprint(h, head_);
    h = detail::mix_fingerprint(h, chain_.height());
    h = detail::mix_fingerprint(h, tree_.size());
    h = detail::mix_fingerprint(h, pool_.size());
    h = detail::mix_fingerprint(h, orphans_.size());
    h = detail::mix_fingerprint(h, rng_.draws());
    h = detail::mix_fingerprint(h, head_since_.ticks);
    return h;
  }

 private:
  struct Node {
    Block block;
    std::uint64_t weight = 0;  // cumulative
  };

  static constexpr std::size_t kMaxResponse = 8;

  std::uint64_t block_weight(const Block& b) const { return in_turn_signer(b.height) == b.proposer ? 2 : 1; }

  /// Blocks strictly above the committed head on the branch ending at `tip`,
  /// oldest first. Empty when the branch does not extend the committed head.
  std::optional<std::vector<const Block*>> segment(Digest tip) const {
    std::vector<const Block*> seg;
    Digest d = tip;
    while (true) {
      auto it = tree_.find(d);
      if (it == tree_.end()) return std::nullopt;
      const Block& b = it->second.block;
      if (b.height == chain_.height()) {
        if (b.digest != chain_.head().digest) return std::nullopt;
        break;
      }
      if (b.height < chain_.height()) return std::nullopt;
      seg.push_back(&b);
      d = b.parent;
    }
    std::reverse(seg.begin(), seg.end());
    return seg;
  }

  // --- transactions -------------------------------------------------------

  void on_tx(Actions& out, const Transaction& tx, NodeId client, SimTime now, bool from_client) {
    if (chain_.contains_tx(tx.id) || pool_.contains(tx.id)) return;
    pool_.push(tx, now);
    clients_[tx.id] = client;
    if (from_client) broadcast(out, msg::TxForward{tx, client});
    if (idle_ready_ && *idle_ready_ == head().height + 1) {
      idle_ready_.reset();
      if (in_turn(head().height + 1)) {
        on_slot(out, now);
      } else {
        arm_slot(out, head().height + 1, now + params().clique_min_backoff_ms + backoff(head().height + 1));
      }
    }
  }

  // --- sealing ------------------------------------------------------------

  std::size_t eligible_out_of_turn(std::uint64_t height) const {
    std::size_t k = 0;
    for (NodeId s : validators().members()) {
      if (s != in_turn_signer(height) && !recently_signed(s, head_)) ++k;
    }
    return k;
  }

  Millis backoff(std::uint64_t height) {
    const auto k = static_cast<std::int64_t>(eligible_out_of_turn(height));
    return static_cast<Millis>(rng_.uniform_int(0, static_cast<std::int64_t>(params().clique_backoff_unit_ms) * k));
  }

  void arm_slot(Actions& out, std::uint64_t height, SimTime at) {
    slot_height_ = height;
    if (slot_at_ == at) return;
    slot_at_ = at;
    set_timer(out, "slot", at);
  }

  void schedule_slot(Actions& out, SimTime now) {
    idle_ready_.reset();
    const std::uint64_t h = head().height + 1;
    if (recently_signed(self(), head_)) {
      slot_height_ = 0;
      if (slot_at_) {
        cancel_timer(out, "slot");
        slot_at_.reset();
      }
      return;
    }
    const Millis period = params().clique_period_ms;
    if (in_turn(h)) {
      arm_slot(out, h, max(now, head().proposed_at + period));
    } else {
      arm_slot(out, h, now + period + params().clique_min_backoff_ms + backoff(h));
    }
  }

  bool has_candidates(const std::unordered_set<TxId>& in_branch) const {
    bool any = false;
    pool_.scan([&](const TxPool::Entry& e) {
      if (in_branch.count(e.tx.id) || chain_.contains_tx(e.tx.id)) return true;
      any = true;
      return false;
    });
    return any;
  }

  void on_slot(Actions& out, SimTime now) {
    if (recently_signed(self(), head_)) return;
    auto seg = segment(head_);
    std::unordered_set<TxId> in_branch;
    if (seg) {
      for (const Block* b : *seg) {
        for (const auto& tx : b->txs) in_branch.insert(tx.id);
      }
    }
    if (!params().empty_blocks && !has_candidates(in_branch)) {
      idle_ready_ = head().height + 1;
      return;
    }
    seal(out, now);
  }

  void seal(Actions& out, SimTime now) {
    auto seg = segment(head_);
    if (!seg) return;
    AccountState state = chain_.state();
    std::unordered_set<TxId> in_branch;
    for (const Block* b : *seg) {
      for (const auto& tx : b->txs) {
        state.try_apply(tx);
        in_branch.insert(tx.id);
      }
    }
    AssemblyRules rules;
    rules.block_size = params().block_size;
    rules.allow_empty = params().empty_blocks;
    rules.state = &state;
    rules.skip = [&](TxId id) { return in_branch.count(id) != 0 || chain_.contains_tx(id); };
    Assembly a;
    try {
      a = assemble_block(pool_, head(), self(), now, rules);
    } catch (const LedgerError&) {
      idle_ready_ = head().height + 1;
      return;
    }
    for (const auto& tx : a.rejected) {
      auto c = clients_.find(tx.id);
      if (c != clients_.end()) out.push_back(act::RejectTx{tx.id, c->second, "InsufficientFunds"});
    }
    if (!a.block) {
      idle_ready_ = head().height + 1;
      return;
    }
    const Block b = *a.block;
    out.push_back(act::ProposalCreated{b});
    trace(out, "Propose", "height=" + std::to_string(b.height) + ";digest=" + hex_digest(b.digest) +
                              ";in_turn=" + (in_turn(b.height) ? "1" : "0"));
    broadcast(out, msg::NewBlock{b});
    insert(out, b, now);
  }

  // --- block intake -------------------------------------------------------

  void receive_blocks(Actions& out, NodeId src, std::vector<Block> blocks, SimTime now) {
    std::sort(blocks.begin(), blocks.end(), [](const Block& a, const Block& b) { return a.height < b.height; });
    for (const auto& b : blocks) accept(out, src, b, now);
  }

  void reject(Actions& out, const Block& b, std::string_view reason) {
    trace(out, "Reject", "height=" + std::to_string(b.height) + ";digest=" + hex_digest(b.digest) +
                             ";proposer=" + std::to_string(b.proposer) + ";reason=" + std::string(reason));
  }

  void accept(Actions& out, NodeId src, const Block& b, SimTime now) {
    if (tree_.count(b.digest)) return;
    if (!digest_intact(b)) return reject(out, b, to_string(InvalidReason::DigestMismatch));
    if (!validators().contains(b.proposer)) return reject(out, b, to_string(InvalidReason::UnauthorizedProposer));
    auto parent = tree_.find(b.parent);
    if (parent == tree_.end()) {
      if (b.height <= chain_.height()) return;
      if (orphans_.size() >= 2 * params().block_size) orphans_.pop_front();
      orphans_.push_back(b);
      request_blocks(out, src, now);
      return;
    }
    const Block& pb = parent->second.block;
    if (b.height != pb.height + 1) return reject(out, b, to_string(InvalidReason::HeightMismatch));
    auto seg = segment(b.parent);
    if (!seg) return reject(out, b, "BelowCommitted");
    if (recently_signed(b.proposer, b.parent)) return reject(out, b, "RecentlySigned");
    AccountState state = chain_.state();
    std::unordered_set<TxId> in_branch;
    for (const Block* s : *seg) {
      for (const auto& tx : s->txs) {
        state.try_apply(tx);
        in_branch.insert(tx.id);
      }
    }
    auto seen = [&](TxId id) { return in_branch.count(id) != 0 || chain_.contains_tx(id); };
    if (auto v = validate_block(b, pb, state, seen); !v) return reject(out, b, to_string(v.reason));
    insert(out, b, now);
  }

  void insert(Actions& out, const Block& b, SimTime now) {
    const std::uint64_t w = tree_.at(b.parent).weight + block_weight(b);
    tree_[b.digest] = Node{b, w};
    // Equal weight goes to the lower digest so that every node settles on
    // the same branch.
    if (w > head_weight() || (w == head_weight() && b.digest < head_)) {
      head_since_ = now;
      if (b.parent != head_) {
        trace(out, "Reorg", "from=" + hex_digest(head_) + ";to=" + hex_digest(b.digest) +
                                ";height=" + std::to_string(b.height));
      }
      head_ = b.digest;
      commit_ready(out, now);
      schedule_slot(out, now);
    }
    adopt_orphans(out, b.digest, now);
  }

  void adopt_orphans(Actions& out, Digest parent, SimTime now) {
    std::vector<Block> ready;
    for (auto it = orphans_.begin(); it != orphans_.end();) {
      if (it->parent == parent) {
        ready.push_back(*it);
        it = orphans_.erase(it);
      } else {
        ++it;
      }
    }
    for (const auto& b : ready) accept(out, b.proposer, b, now);
  }

  void commit_ready(Actions& out, SimTime now) {
    const std::uint64_t depth = params().clique_confirmation_depth;
    if (head().height < depth) return;
    const std::uint64_t target = head().height - depth;
    if (target <= chain_.height()) return;
    auto seg = segment(head_);
    if (!seg) return;
    for (const Block* b : *seg) {
      if (b->height > target) break;
      const Block copy = *b;
      commit(out, copy, now);
      pool_.erase_block(copy);
      for (const auto& tx : copy.txs) clients_.erase(tx.id);
    }
  }

  // --- stall recovery -----------------------------------------------------

  /// Keeps one "stall" timer pending while there is work to order.
  void arm_stall(Actions& out, SimTime now) {
    if (stall_at_ || pool_.empty()) return;
    const SimTime at = max(now, head_since_ + 2 * params().clique_period_ms);
    stall_at_ = at == now ? now + params().clique_period_ms : at;
    set_timer(out, "stall", *stall_at_);
  }

  /// The head has not moved for two periods although transactions wait:
  /// blocks were probably lost on the way, so pull them from every peer.
  void on_stall(Actions& out, SimTime now) {
    if (pool_.empty() || now - head_since_ < 2 * params().clique_period_ms) return;
    trace(out, "Sync", "height=" + std::to_string(chain_.height() + 1) + ";head=" + std::to_string(head().height));
    broadcast(out, msg::BlockRequest{chain_.height() + 1});
  }

  void request_blocks(Actions& out, NodeId src, SimTime now) {
    if (last_request_ && now - *last_request_ < params().sync_retry_ms) return;
    last_request_ = now;
    send(out, src, msg::BlockRequest{chain_.height() + 1});
  }

  void on_block_request(Actions& out, NodeId src, const msg::BlockRequest& p) {
    if (p.from_height == 0 || p.from_height > head().height) return;
    std::vector<Block> branch;
    for (Digest d = head_; true;) {
      const Block& b = tree_.at(d).block;
      if (b.height < p.from_height) break;
      branch.push_back(b);
      d = b.parent;
    }
    std::reverse(branch.begin(), branch.end());
    if (branch.size() > kMaxResponse) branch.resize(kMaxResponse);
    send(out, src, msg::BlockResponse{std::move(branch)});
  }

  RngStream rng_;
  std::map<Digest, Node> tree_;
  Digest head_ = 0;
  std::deque<Block> orphans_;
  TxPool pool_;
  std::map<TxId, NodeId> clients_;

  std::uint64_t slot_height_ = 0;
  std::optional<SimTime> slot_at_;
  std::optional<std::uint64_t> idle_ready_;
  std::optional<SimTime> last_request_;
  SimTime head_since_;
  std::optional<SimTime> stall_at_;
};

}  // namespace chaosbft
