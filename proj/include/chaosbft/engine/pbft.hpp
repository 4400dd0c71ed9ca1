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
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "chaosbft/engine/engine.hpp"

namespace chaosbft {

/// Tag binding a prepared certificate to its sender.
inline std::uint64_t pbft_cert_tag(std::uint64_t view, Digest digest, NodeId sender) {
  detail::Fnv64 h;
  h.mix(0x7072657061726564ULL);
  h.mix(view);
  h.mix(digest);
  h.mix(sender);
  return h.value();
}

/// Three-phase PBFT over a chain of blocks, one height in flight at a time.
///
/// Quorums are ValidatorSet::bft_quorum(). A block is prepared once the
/// primary's pre-prepare is accepted and q-1 distinct backups (self
/// included) sent matching prepares; it commits on q matching commits.
class PbftEngine : public Engine {
 public:
  explicit PbftEngine(EngineContext ctx) : Engine(std::move(ctx)) {}

  Protocol protocol() const override { return Protocol::Pbft; }

  std::uint64_t view() const { return view_; }
  bool in_view_change() const { return in_vc_; }
  NodeId primary_of(std::uint64_t v) const { return validators().at(v % validators().size()); }
  NodeId primary() const { return primary_of(view_); }
  bool is_primary() const { return primary() == self(); }
  std::size_t quorum() const { return validators().bft_quorum(); }
  Millis current_timeout() const {
    return params().pbft_view_timeout_ms << std::min<std::uint64_t>(failures_, kMaxTimeoutDoublings);
  }
  std::size_t pool_size() const { return pool_.size(); }
  std::size_t buffered() const { return future_.size(); }

  Actions start(SimTime) override { return {}; }

  /// Proposes `block` at the next height in the current view.
  Actions propose(const Block& block, SimTime now) {
    if (!is_primary()) throw NotPrimary("node " + std::to_string(self()) + " is not primary of view " +
                                        std::to_string(view_));
    Actions out;
    send_pre_prepare(out, block, now, true);
    refresh_timers(out, now);
    return out;
  }

  Actions on_message(const Message& m, SimTime now) override {
    Actions out;
    handle(out, m, now);
    refresh_timers(out, now);
    return out;
  }

  Actions on_timer(const std::string& label, SimTime now) override {
    Actions out;
    if (label == "progress") {
      progress_deadline_.reset();
      on_progress_timeout(out, now);
    } else if (label == "block") {
      block_deadline_.reset();
      maybe_propose(out, now);
    } else if (label == "sync") {
      sync_deadline_.reset();
      request_sync(out, now);
    }
    refresh_timers(out, now);
    return out;
  }

  std::uint64_t fingerprint() const override {
    std::uint64_t h = 0;
    h = detail::mix_fingerprint(h, view_);
    h = detail::mix_fingerprint(h, vc_target_);
    h = detail::mix_fingerprint(h, in_vc_);
    h = detail::mix_fingerprint(h, failures_);
    h = detail::mix_fingerprint(h, chain_.height());
    h = detail::mix_fingerprint(h, chain_.head().digest);
    h = detail::mix_fingerprint(h, pool_.size());
    h = detail::mix_fingerprint(h, awaiting_.size());
    h = detail::mix_fingerprint(h, last_progress_.ticks);
    for (const auto& [v, b] : pre_prepares_) h = detail::mix_fingerprint(h, v ^ b.digest);
    for (const auto& [k, s] : prepares_) h = detail::mix_fingerprint(h, k.second ^ s.size());
    for (const auto& [k, s] : commits_) h = detail::mix_fingerprint(h, k.second ^ (s.size() << 8));
    return h;
  }

 private:
  using VoteKey = std::pair<std::uint64_t, Digest>;  // (view, digest)

  struct Awaiting {
    Transaction tx;
    NodeId client = 0;
    SimTime last_sent;
    int attempts = 0;
  };

  struct Hint {
    bool committed = false;
    std::uint64_t view = 0;
    Block block;
  };

  static constexpr int kMaxForwardAttempts = 5;
  static constexpr std::uint64_t kMaxTimeoutDoublings = 3;
  static constexpr int kMaxSyncMisses = 5;

  std::uint64_t next_height() const { return chain_.height() + 1; }

  void handle(Actions& out, const Message& m, SimTime now) {
    if (!validators().contains(m.src) && !std::holds_alternative<msg::ClientSubmit>(m.payload)) {
      trace(out, "Malformed", "from=" + std::to_string(m.src) + ";reason=unknown-sender");
      return;
    }
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, msg::ClientSubmit>) {
            on_client(out, p.tx, m.src, now);
          } else if constexpr (std::is_same_v<T, msg::TxForward>) {
            on_forward(out, p, now);
          } else if constexpr (std::is_same_v<T, msg::PrePrepare>) {
            on_pre_prepare(out, m, p, now);
          } else if constexpr (std::is_same_v<T, msg::Prepare>) {
            on_vote(out, m, p.view, p.height, p.digest, false, now);
          } else if constexpr (std::is_same_v<T, msg::Commit>) {
            on_vote(out, m, p.view, p.height, p.digest, true, now);
          } else if constexpr (std::is_same_v<T, msg::ViewChange>) {
            on_view_change(out, m.src, p, now);
          } else if constexpr (std::is_same_v<T, msg::NewView>) {
            on_new_view(out, m.src, p, now);
          } else if constexpr (std::is_same_v<T, msg::SyncRequest>) {
            on_sync_request(out, m.src, p);
          } else if constexpr (std::is_same_v<T, msg::SyncResponse>) {
            on_sync_response(out, m.src, p, now);
          } else {
            trace(out, "Malformed", "from=" + std::to_string(m.src) + ";reason=foreign-payload");
          }
        },
        m.payload);
  }

  // --- transactions -------------------------------------------------------

  void on_client(Actions& out, const Transaction& tx, NodeId client, SimTime now) {
    if (chain_.contains_tx(tx.id) || awaiting_.count(tx.id)) return;
    awaiting_[tx.id] = Awaiting{tx, client, now, 0};
    route(out, tx, client, now);
  }

  void on_forward(Actions& out, const msg::TxForward& p, SimTime now) {
    if (chain_.contains_tx(p.tx.id)) return;
    if (is_primary() && !in_vc_) {
      clients_[p.tx.id] = p.client;
      if (pool_.push(p.tx, now)) maybe_propose(out, now);
    } else if (!awaiting_.count(p.tx.id)) {
      // Misrouted; held until a timer or view change sends it on.
      awaiting_[p.tx.id] = Awaiting{p.tx, p.client, now, 0};
    }
  }

  void route(Actions& out, const Transaction& tx, NodeId client, SimTime now) {
    if (is_primary()) {
      if (in_vc_) return;
      clients_[tx.id] = client;
      if (pool_.push(tx, now)) maybe_propose(out, now);
    } else {
      send(out, primary(), msg::TxForward{tx, client});
    }
  }

  void forward_awaiting(Actions& out, SimTime now) {
    for (auto it = awaiting_.begin(); it != awaiting_.end();) {
      if (chain_.contains_tx(it->first)) {
        it = awaiting_.erase(it);
        continue;
      }
      it->second.last_sent = now;
      route(out, it->second.tx, it->second.client, now);
      ++it;
    }
  }

  // --- proposing ----------------------------------------------------------

  void maybe_propose(Actions& out, SimTime now) {
    if (!is_primary() || in_vc_ || pre_prepares_.count(view_)) return;
    // A hinted block is re-proposed even below the floor: when only one
    // peer committed it, sync can never gather f+1 copies.
    const std::uint64_t h = next_height();
    if (auto it = hints_.find(h); it != hints_.end()) {
      Block b = it->second.block;
      hints_.erase(it);
      if (chain_.validate(b, any_validator())) {
        send_pre_prepare(out, b, now, false);
        return;
      }
    }
    if (chain_.height() < propose_floor_) {
      request_sync(out, now);
      return;
    }
    const auto& p = params();
    const bool due = pool_.size() >= p.block_size ||
                     (pool_.oldest_arrival() && now - *pool_.oldest_arrival() >= p.block_interval_ms);
    if (pool_.empty() && !p.empty_blocks) return;
    if (pool_.empty()) {
      // Empty blocks are paced by the block interval after the last commit.
      const SimTime at = chain_.blocks().back().committed_at + p.block_interval_ms;
      if (now < at) {
        arm_block_timer(out, at);
        return;
      }
    } else if (!due) {
      arm_block_timer(out, *pool_.oldest_arrival() + p.block_interval_ms);
      return;
    }
    AssemblyRules rules;
    rules.block_size = p.block_size;
    rules.allow_empty = p.empty_blocks;
    rules.state = &chain_.state();
    rules.skip = [this](TxId id) { return chain_.contains_tx(id); };
    Assembly a = assemble_block(pool_, chain_.head(), self(), now, rules);
    for (const auto& tx : a.rejected) {
      auto c = clients_.find(tx.id);
      if (c != clients_.end()) out.push_back(act::RejectTx{tx.id, c->second, "InsufficientFunds"});
      awaiting_.erase(tx.id);
    }
    if (a.block) {
      send_pre_prepare(out, *a.block, now, true);
    } else if (!pool_.empty()) {
      maybe_propose(out, now);
    }
  }

  void arm_block_timer(Actions& out, SimTime at) {
    if (block_deadline_ == at) return;
    block_deadline_ = at;
    set_timer(out, "block", at);
  }

  void send_pre_prepare(Actions& out, const Block& b, SimTime now, bool fresh) {
    pre_prepares_[view_] = b;
    if (fresh) out.push_back(act::ProposalCreated{b});
    trace(out, "Propose",
          "view=" + std::to_string(view_) + ";height=" + std::to_string(b.height) + ";digest=" + hex_digest(b.digest) +
              (fresh ? "" : ";reproposal=1"));
    broadcast(out, msg::PrePrepare{view_, b.height, b.digest, b});
    if (block_deadline_) {
      cancel_timer(out, "block");
      block_deadline_.reset();
    }
    check_progress(out, now);
  }

  // --- normal case --------------------------------------------------------

  void buffer(const Message& m) {
    // Oldest first out, so stale junk cannot pin the buffer.
    if (future_.size() >= 2 * params().block_size) future_.pop_front();
    future_.push_back(m);
  }

  void replay_buffer(Actions& out, SimTime now) {
    std::deque<Message> pending;
    pending.swap(future_);
    for (const auto& m : pending) handle(out, m, now);
  }

  void note_ahead(Actions& out, std::uint64_t committed_elsewhere, SimTime now) {
    if (committed_elsewhere <= chain_.height()) return;
    sync_target_ = std::max(sync_target_, committed_elsewhere);
    request_sync(out, now);
  }

  void on_pre_prepare(Actions& out, const Message& m, const msg::PrePrepare& p, SimTime now) {
    if (p.view < view_) return;
    if (m.src != primary_of(p.view)) {
      trace(out, "Malformed", "from=" + std::to_string(m.src) + ";reason=not-primary");
      return;
    }
    if (p.view > view_) enter_view(out, p.view, now);
    if (in_vc_) return;
    const std::uint64_t h = next_height();
    if (p.height < h) {
      revote(out, p.height, p.digest);
      return;
    }
    if (p.height > h) {
      buffer(m);
      note_ahead(out, p.height - 1, now);
      return;
    }
    if (p.digest != p.block.digest || p.block.height != h) {
      trace(out, "Reject", "height=" + std::to_string(h) + ";reason=HeaderMismatch");
      return;
    }
    if (auto v = chain_.validate(p.block, any_validator()); !v) {
      trace(out, "Reject", "height=" + std::to_string(h) + ";digest=" + hex_digest(p.block.digest) +
                               ";reason=" + std::string(to_string(v.reason)));
      return;
    }
    if (auto it = pre_prepares_.find(p.view); it != pre_prepares_.end()) return;
    pre_prepares_[p.view] = p.block;
    for (const auto& tx : p.block.txs) pool_.erase(tx.id);
    prepares_[{p.view, p.digest}].insert(self());
    broadcast(out, msg::Prepare{p.view, h, p.digest});
    check_progress(out, now);
  }

  /// Lets a node that already committed `height` vote again for the same
  /// block when a new primary re-proposes it.
  void revote(Actions& out, std::uint64_t height, Digest digest) {
    if (height == 0 || height > chain_.height()) return;
    if (chain_.at(height).digest != digest) return;
    if (!revoted_.insert({view_, height}).second) return;
    broadcast(out, msg::Prepare{view_, height, digest});
    broadcast(out, msg::Commit{view_, height, digest});
  }

  void on_vote(Actions& out, const Message& m, std::uint64_t v, std::uint64_t height, Digest digest, bool is_commit,
               SimTime now) {
    if (v < view_) return;
    const std::uint64_t h = next_height();
    if (height < h) return;
    if (v > view_ || height > h) {
      buffer(m);
      if (height > h) note_ahead(out, height - 1, now);
      return;
    }
    if (is_commit) {
      commits_[{v, digest}].insert(m.src);
    } else {
      if (m.src == primary_of(v)) return;
      prepares_[{v, digest}].insert(m.src);
    }
    check_progress(out, now);
  }

  void check_progress(Actions& out, SimTime now) {
    const std::size_t q = quorum();
    for (const auto& [v, b] : pre_prepares_) {
      const VoteKey key{v, b.digest};
      const bool prepared = prepares_[key].size() + 1 >= q;
      if (prepared) {
        if (!prepared_cert_ || prepared_cert_->first <= v) prepared_cert_ = std::make_pair(v, b);
        if (v == view_ && !in_vc_ && sent_commit_.insert(key).second) {
          commits_[key].insert(self());
          broadcast(out, msg::Commit{v, b.height, b.digest});
        }
      }
      if (commits_[key].size() >= q) {
        Block block = b;
        commit_block(out, block, now);
        return;
      }
    }
  }

  void commit_block(Actions& out, const Block& b, SimTime now) {
    commit(out, b, now);
    pool_.erase_block(b);
    for (const auto& tx : b.txs) {
      awaiting_.erase(tx.id);
      clients_.erase(tx.id);
    }
    pre_prepares_.clear();
    prepares_.clear();
    commits_.clear();
    sent_commit_.clear();
    prepared_cert_.reset();
    hints_.erase(hints_.begin(), hints_.upper_bound(b.height));
    sync_votes_.erase(sync_votes_.begin(), sync_votes_.upper_bound(b.height));
    failures_ = 0;
    sync_misses_ = 0;
    last_progress_ = now;
    replay_buffer(out, now);
    try_sync_commit(out, now);
    maybe_propose(out, now);
  }

  // --- view change --------------------------------------------------------

  bool has_work() const { return !awaiting_.empty() || !pool_.empty() || !pre_prepares_.empty() || in_vc_; }

  void on_progress_timeout(Actions& out, SimTime now) {
    if (!has_work()) return;
    if (now - last_progress_ >= current_timeout()) {
      ++failures_;
      start_view_change(out, std::max(view_, vc_target_) + 1, now);
      return;
    }
    // The view is making progress; resend anything that has been waiting a
    // full timeout, in case its forward was lost.
    for (auto it = awaiting_.begin(); it != awaiting_.end();) {
      if (now - it->second.last_sent < params().pbft_view_timeout_ms) {
        ++it;
        continue;
      }
      if (++it->second.attempts > kMaxForwardAttempts || chain_.contains_tx(it->first)) {
        it = awaiting_.erase(it);
        continue;
      }
      it->second.last_sent = now;
      route(out, it->second.tx, it->second.client, now);
      ++it;
    }
  }

  msg::ViewChange make_view_change(std::uint64_t target) const {
    msg::ViewChange vc;
    vc.new_view = target;
    vc.committed_height = chain_.height();
    vc.head = chain_.head();
    if (prepared_cert_) {
      vc.has_prepared = true;
      vc.prepared_view = prepared_cert_->first;
      vc.prepared = prepared_cert_->second;
      vc.cert_tag = pbft_cert_tag(vc.prepared_view, vc.prepared.digest, self());
    }
    return vc;
  }

  void start_view_change(Actions& out, std::uint64_t target, SimTime now) {
    if (target <= view_ || (in_vc_ && target <= vc_target_)) return;
    in_vc_ = true;
    vc_target_ = target;
    last_progress_ = now;
    trace(out, "ViewChange", "view=" + std::to_string(target) + ";timeout=" + std::to_string(current_timeout()));
    auto vc = make_view_change(target);
    vc_msgs_[target][self()] = vc;
    latest_vc_[self()] = target;
    broadcast(out, vc);
    check_vc_quorum(out, target, now);
  }

  void on_view_change(Actions& out, NodeId src, msg::ViewChange p, SimTime now) {
    if (!digest_intact(p.head) || p.head.height != p.committed_height) {
      trace(out, "Malformed", "from=" + std::to_string(src) + ";reason=view-change-head");
      return;
    }
    if (p.has_prepared && (!digest_intact(p.prepared) ||
                           p.cert_tag != pbft_cert_tag(p.prepared_view, p.prepared.digest, src))) {
      trace(out, "Malformed", "from=" + std::to_string(src) + ";reason=view-change-cert");
      p.has_prepared = false;
    }
    note_ahead(out, p.committed_height, now);
    if (p.new_view <= view_) {
      // The sender missed our NewView.
      if (is_primary() && !in_vc_) send(out, src, msg::NewView{view_, next_height()});
      return;
    }
    vc_msgs_[p.new_view][src] = p;
    latest_vc_[src] = std::max(latest_vc_[src], p.new_view);

    // f+1 nodes asking for a later view means at least one correct node
    // timed out; join them.
    const std::uint64_t mine = in_vc_ ? vc_target_ : view_;
    std::vector<std::uint64_t> ahead;
    for (const auto& [node, v] : latest_vc_) {
      if (v > mine) ahead.push_back(v);
    }
    const std::size_t f1 = validators().f() + 1;
    if (ahead.size() >= f1) {
      std::sort(ahead.rbegin(), ahead.rend());
      start_view_change(out, ahead[f1 - 1], now);
    }
    check_vc_quorum(out, p.new_view, now);
  }

  void check_vc_quorum(Actions& out, std::uint64_t v, SimTime now) {
    if (v <= view_ || primary_of(v) != self()) return;
    auto it = vc_msgs_.find(v);
    if (it == vc_msgs_.end() || it->second.size() < quorum()) return;
    // Never propose below what the quorum has already committed; prefer a
    // reported committed block, then the highest-view prepared certificate.
    std::uint64_t floor = 0;
    std::map<std::uint64_t, Hint> hints;
    for (const auto& [node, vc] : it->second) {
      floor = std::max(floor, vc.committed_height);
      if (vc.head.height > chain_.height()) hints[vc.head.height] = Hint{true, 0, vc.head};
    }
    for (const auto& [node, vc] : it->second) {
      if (!vc.has_prepared || vc.prepared.height <= chain_.height()) continue;
      auto& slot = hints[vc.prepared.height];
      if (slot.committed) continue;
      if (slot.block.height == 0 || vc.prepared_view > slot.view) slot = Hint{false, vc.prepared_view, vc.prepared};
    }
    hints_ = std::move(hints);
    propose_floor_ = floor;
    enter_view(out, v, now);
    broadcast(out, msg::NewView{v, next_height()});
    note_ahead(out, floor, now);
    maybe_propose(out, now);
  }

  void on_new_view(Actions& out, NodeId src, const msg::NewView& p, SimTime now) {
    if (src != primary_of(p.view)) {
      trace(out, "Malformed", "from=" + std::to_string(src) + ";reason=not-primary");
      return;
    }
    if (p.view > view_ || (p.view == view_ && in_vc_)) enter_view(out, p.view, now);
    if (p.height > 0) note_ahead(out, p.height - 1, now);
  }

  void enter_view(Actions& out, std::uint64_t v, SimTime now) {
    const bool was_primary = is_primary();
    view_ = v;
    vc_target_ = v;
    in_vc_ = false;
    last_progress_ = now;
    trace(out, "NewView", "view=" + std::to_string(v) + ";primary=" + std::to_string(primary()));
    pre_prepares_.erase(pre_prepares_.begin(), pre_prepares_.lower_bound(v));
    vc_msgs_.erase(vc_msgs_.begin(), vc_msgs_.upper_bound(v));
    if (was_primary && !is_primary()) {
      // Hand our pool to the new primary.
      pool_.scan([&](const TxPool::Entry& e) {
        if (!awaiting_.count(e.tx.id)) {
          auto c = clients_.find(e.tx.id);
          awaiting_[e.tx.id] = Awaiting{e.tx, c == clients_.end() ? NodeId{0} : c->second, now, 0};
        }
        return true;
      });
      pool_.drain();
    }
    if (!is_primary()) {
      hints_.clear();
      propose_floor_ = 0;
    }
    forward_awaiting(out, now);
    replay_buffer(out, now);
  }

  // --- catch-up -----------------------------------------------------------

  void request_sync(Actions& out, SimTime now) {
    if (chain_.height() >= std::max(sync_target_, propose_floor_)) return;
    if (sync_misses_ >= kMaxSyncMisses) {
      // Nobody answers; the height was probably a corrupted claim.
      sync_target_ = 0;
      sync_misses_ = 0;
      if (chain_.height() >= propose_floor_) return;
    }
    const Millis retry = params().sync_retry_ms;
    if (last_sync_request_ && now - *last_sync_request_ < retry) {
      const SimTime at = *last_sync_request_ + retry;
      if (sync_deadline_ != at) {
        sync_deadline_ = at;
        set_timer(out, "sync", at);
      }
      return;
    }
    last_sync_request_ = now;
    ++sync_misses_;
    broadcast(out, msg::SyncRequest{next_height()});
    sync_deadline_ = now + retry;
    set_timer(out, "sync", now + retry);
  }

  void on_sync_request(Actions& out, NodeId src, const msg::SyncRequest& p) {
    if (p.from_height == 0 || p.from_height > chain_.height()) return;
    msg::SyncResponse r;
    r.from_height = p.from_height;
    const std::uint64_t last = std::min(chain_.height(), p.from_height + 7);
    for (std::uint64_t h = p.from_height; h <= last; ++h) r.blocks.push_back(chain_.at(h));
    send(out, src, std::move(r));
  }

  void on_sync_response(Actions& out, NodeId src, const msg::SyncResponse& p, SimTime now) {
    for (const auto& b : p.blocks) {
      if (b.height <= chain_.height() || !digest_intact(b)) continue;
      auto& slot = sync_votes_[b.height][b.digest];
      slot.first.insert(src);
      slot.second = b;
      sync_target_ = std::max(sync_target_, b.height);
      sync_misses_ = 0;
    }
    try_sync_commit(out, now);
  }

  /// Adopts the next block once f+1 peers vouch for the same digest.
  void try_sync_commit(Actions& out, SimTime now) {
    auto it = sync_votes_.find(next_height());
    if (it == sync_votes_.end()) return;
    for (const auto& [digest, votes] : it->second) {
      if (votes.first.size() < validators().f() + 1) continue;
      if (!chain_.validate(votes.second, any_validator())) continue;
      trace(out, "Sync", "height=" + std::to_string(votes.second.height) + ";digest=" + hex_digest(digest));
      Block b = votes.second;
      commit_block(out, b, now);
      return;
    }
  }

  // --- timers -------------------------------------------------------------

  void refresh_timers(Actions& out, SimTime now) {
    if (!has_work()) {
      idle_ = true;
      if (progress_deadline_) {
        cancel_timer(out, "progress");
        progress_deadline_.reset();
      }
      return;
    }
    if (idle_) {
      idle_ = false;
      last_progress_ = max(last_progress_, now);
    }
    SimTime at = last_progress_ + current_timeout();
    if (at <= now) at = now + current_timeout();
    if (progress_deadline_ != at) {
      progress_deadline_ = at;
      set_timer(out, "progress", at);
    }
  }

  std::uint64_t view_ = 0;
  std::uint64_t vc_target_ = 0;
  bool in_vc_ = false;
  std::uint64_t failures_ = 0;
  SimTime last_progress_;
  bool idle_ = true;

  TxPool pool_;
  std::map<TxId, NodeId> clients_;
  std::map<TxId, Awaiting> awaiting_;

  std::map<std::uint64_t, Block> pre_prepares_;  // by view, next height only
  std::map<VoteKey, std::set<NodeId>> prepares_;
  std::map<VoteKey, std::set<NodeId>> commits_;
  std::set<VoteKey> sent_commit_;
  std::optional<std::pair<std::uint64_t, Block>> prepared_cert_;
  std::set<std::pair<std::uint64_t, std::uint64_t>> revoted_;

  std::map<std::uint64_t, std::map<NodeId, msg::ViewChange>> vc_msgs_;
  std::map<NodeId, std::uint64_t> latest_vc_;
  std::map<std::uint64_t, Hint> hints_;
  std::uint64_t propose_floor_ = 0;

  std::deque<Message> future_;
  std::uint64_t sync_target_ = 0;
  int sync_misses_ = 0;
  std::optional<SimTime> last_sync_request_;
  std::map<std::uint64_t, std::map<Digest, std::pair<std::set<NodeId>, Block>>> sync_votes_;

  std::optional<SimTime> progress_deadline_;
  std::optional<SimTime> block_deadline_;
  std::optional<SimTime> sync_deadline_;
};

}  // namespace chaosbft
