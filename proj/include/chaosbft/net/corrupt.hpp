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
#include <string>
#include <utility>
#include <vector>

#include "chaosbft/net/message.hpp"
#include "chaosbft/sim/rng.hpp"

namespace chaosbft {

struct Corruption {
  Payload payload;
  /// Which field was rewritten, e.g. "digest" or "block.tx.amount".
  std::string field;
};

namespace detail {

/// Collects the mutable fields of one payload, then rewrites exactly one of
/// them. Every mutation changes the value, so the output never equals the
/// input. Transaction ids are never touched.
class Mutator {
 public:
  explicit Mutator(RngStream& rng) : rng_(rng) {}

  void number(std::string name, std::uint64_t& v) {
    sites_.push_back({std::move(name), [this, &v] { v += static_cast<std::uint64_t>(rng_.uniform_int(1, 3)); }});
  }
  void digest(std::string name, Digest& d) {
    sites_.push_back({std::move(name), [this, &d] { d ^= (rng_.next_u64() | 1ULL); }});
  }
  void flag(std::string name, bool& b) {
    sites_.push_back({std::move(name), [&b] { b = !b; }});
  }
  void amount(std::string name, std::uint64_t& a) {
    sites_.push_back({std::move(name), [this, &a] { a += static_cast<std::uint64_t>(rng_.uniform_int(1, 1000)); }});
  }
  void direction(std::string name, Transaction& tx) {
    // Only a real change when the endpoints differ.
    if (tx.from == tx.to) return;
    sites_.push_back({std::move(name), [&tx] { std::swap(tx.from, tx.to); }});
  }
  void tx(const std::string& prefix, Transaction& t) {
    amount(prefix + ".amount", t.amount);
    direction(prefix + ".direction", t);
  }
  /// Rewrites block content without recomputing its digest, which is what
  /// a tampering link would produce.
  void block(const std::string& prefix, Block& b) {
    if (!b.txs.empty()) {
      sites_.push_back({prefix + ".tx.amount", [this, &b] {
                          auto i = static_cast<std::size_t>(
                              rng_.uniform_int(0, static_cast<std::int64_t>(b.txs.size()) - 1));
                          b.txs[i].amount += static_cast<std::uint64_t>(rng_.uniform_int(1, 1000));
                        }});
    }
    digest(prefix + ".digest", b.digest);
  }

  std::string apply() {
    auto i = static_cast<std::size_t>(rng_.uniform_int(0, static_cast<std::int64_t>(sites_.size()) - 1));
    sites_[i].mutate();
    return sites_[i].name;
  }

 private:
  struct Site {
    std::string name;
    std::function<void()> mutate;
  };
  RngStream& rng_;
  std::vector<Site> sites_;
};

inline void expose(Mutator& m, msg::ClientSubmit& p) { m.tx("tx", p.tx); }
inline void expose(Mutator& m, msg::Receipt& p) { m.flag("committed", p.committed); }
inline void expose(Mutator& m, msg::TxForward& p) { m.tx("tx", p.tx); }
inline void expose(Mutator& m, msg::PrePrepare& p) {
  m.number("view", p.view);
  m.number("height", p.height);
  m.digest("digest", p.digest);
  m.block("block", p.block);
}
inline void expose(Mutator& m, msg::Prepare& p) {
  m.number("view", p.view);
  m.number("height", p.height);
  m.digest("digest", p.digest);
}
inline void expose(Mutator& m, msg::Commit& p) {
  m.number("view", p.view);
  m.number("height", p.height);
  m.digest("digest", p.digest);
}
inline void expose(Mutator& m, msg::ViewChange& p) {
  m.number("new_view", p.new_view);
  m.number("committed_height", p.committed_height);
  m.block("head", p.head);
  if (p.has_prepared) {
    m.number("prepared_view", p.prepared_view);
    m.block("prepared", p.prepared);
  }
}
inline void expose(Mutator& m, msg::NewView& p) {
  m.number("view", p.view);
  m.number("height", p.height);
}
inline void expose(Mutator& m, msg::SyncRequest& p) { m.number("from_height", p.from_height); }
inline void expose(Mutator& m, msg::SyncResponse& p) {
  m.number("from_height", p.from_height);
  for (auto& b : p.blocks) m.block("blocks", b);
}
inline void expose(Mutator& m, msg::RequestVote& p) {
  m.number("term", p.term);
  m.number("last_log_index", p.last_log_index);
  m.number("last_log_term", p.last_log_term);
}
inline void expose(Mutator& m, msg::VoteResponse& p) {
  m.number("term", p.term);
  m.flag("granted", p.granted);
}
inline void expose(Mutator& m, msg::AppendEntries& p) {
  m.number("term", p.term);
  m.number("prev_index", p.prev_index);
  m.number("prev_term", p.prev_term);
  m.number("leader_commit", p.leader_commit);
  for (auto& e : p.entries) m.block("entries", e.block);
}
inline void expose(Mutator& m, msg::AppendResponse& p) {
  m.number("term", p.term);
  m.flag("success", p.success);
  m.number("match_index", p.match_index);
}
inline void expose(Mutator& m, msg::NewBlock& p) { m.block("block", p.block); }
inline void expose(Mutator& m, msg::BlockRequest& p) { m.number("from_height", p.from_height); }
inline void expose(Mutator& m, msg::BlockResponse& p) {
  if (p.blocks.empty()) {
    // An empty answer has no field to rewrite, so the link forges a block.
    p.blocks.push_back(genesis_block());
  }
  for (auto& b : p.blocks) m.block("blocks", b);
}

}  // namespace detail

/// Semantic corruption: returns a payload of the same type with one field
/// rewritten. The choice of field and the new value both come from `rng`, so
/// the same stream state always yields the same output.
inline Corruption corrupt_payload(const Payload& in, RngStream& rng) {
  Corruption out{in, {}};
  std::visit(
      [&](auto& p) {
        detail::Mutator m(rng);
        detail::expose(m, p);
        out.field = m.apply();
      },
      out.payload);
  return out;
}

}  // namespace chaosbft
