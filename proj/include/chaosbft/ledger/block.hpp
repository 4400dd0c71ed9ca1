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
#include <cstdio>
#include <string>
#include <vector>

#include "chaosbft/sim/time.hpp"

namespace chaosbft {

using AccountId = std::uint32_t;
using TxId = std::uint64_t;
using Digest = std::uint64_t;

/// A transfer of `amount` units between two accounts.
struct Transaction {
  TxId id = 0;
  AccountId from = 0;
  AccountId to = 0;
  std::uint64_t amount = 0;
  SimTime created_at;

  bool operator==(const Transaction&) const = default;
};

struct Block {
  std::uint64_t height = 0;
  Digest parent = 0;
  NodeId proposer = 0;
  std::vector<Transaction> txs;
  SimTime proposed_at;
  Digest digest = 0;

  bool operator==(const Block&) const = default;
};

/// Digest of the genesis block. Every chain starts from it.
inline constexpr Digest kGenesisDigest = 0x6368616f73626674ULL;

namespace detail {

class Fnv64 {
 public:
  void mix(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h_ ^= (v >> (8 * i)) & 0xffU;
      h_ *= 0x100000001b3ULL;
    }
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace detail

/// Content hash over height, parent, proposer and the transaction list. Not
/// cryptographic; it only has to expose in-flight tampering.
inline Digest compute_digest(const Block& b) {
  detail::Fnv64 h;
  h.mix(b.height);
  h.mix(b.parent);
  h.mix(b.proposer);
  h.mix(b.txs.size());
  for (const auto& tx : b.txs) {
    h.mix(tx.id);
    h.mix(tx.from);
    h.mix(tx.to);
    h.mix(tx.amount);
    h.mix(tx.created_at.ticks);
  }
  // Never collide with the genesis marker.
  return h.value() == kGenesisDigest ? h.value() ^ 1 : h.value();
}

inline Block genesis_block() {
  Block g;
  g.digest = kGenesisDigest;
  return g;
}

inline bool digest_intact(const Block& b) {
  return b.height == 0 ? b.digest == kGenesisDigest && b.txs.empty() : compute_digest(b) == b.digest;
}

inline std::string hex_digest(Digest d) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(d));
  return std::string(buf, 16);
}

}  // namespace chaosbft
