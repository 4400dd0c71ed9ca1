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
#include <string_view>
#include <variant>
#include <vector>

#include "chaosbft/ledger/block.hpp"
#include "chaosbft/sim/time.hpp"

namespace chaosbft {
namespace msg {

// Client traffic.
struct ClientSubmit {
  Transaction tx;
  std::uint32_t user = 0;
  bool operator==(const ClientSubmit&) const = default;
};
struct Receipt {
  TxId tx_id = 0;
  bool committed = false;
  bool operator==(const Receipt&) const = default;
};

// Validator to validator transaction relay. `client` lets whoever finally
// rejects the transaction answer the submitter directly.
struct TxForward {
  Transaction tx;
  NodeId client = 0;
  bool operator==(const TxForward&) const = default;
};

// PBFT.
struct PrePrepare {
  std::uint64_t view = 0;
  std::uint64_t height = 0;
  Digest digest = 0;
  Block block;
  bool operator==(const PrePrepare&) const = default;
};
struct Prepare {
  std::uint64_t view = 0;
  std::uint64_t height = 0;
  Digest digest = 0;
  bool operator==(const Prepare&) const = default;
};
struct Commit {
  std::uint64_t view = 0;
  std::uint64_t height = 0;
  Digest digest = 0;
  bool operator==(const Commit&) const = default;
};
/// `cert_tag` stands in for the prepare signatures of a real certificate:
/// it binds (prepared_view, block digest, sender) and cannot be recomputed
/// by a tampering link.
struct ViewChange {
  std::uint64_t new_view = 0;
  std::uint64_t committed_height = 0;
  Block head;
  bool has_prepared = false;
  std::uint64_t prepared_view = 0;
  Block prepared;
  std::uint64_t cert_tag = 0;
  bool operator==(const ViewChange&) const = default;
};
struct NewView {
  std::uint64_t view = 0;
  std::uint64_t height = 0;
  bool operator==(const NewView&) const = default;
};
struct SyncRequest {
  std::uint64_t from_height = 0;
  bool operator==(const SyncRequest&) const = default;
};
struct SyncResponse {
  std::uint64_t from_height = 0;
  std::vector<Block> blocks;
  bool operator==(const SyncResponse&) const = default;
};

// Raft.
struct RequestVote {
  std::uint64_t term = 0;
  std::uint64_t last_log_index = 0;
  std::uint64_t last_log_term = 0;
  bool operator==(const RequestVote&) const = default;
};
struct VoteResponse {
  std::uint64_t term = 0;
  bool granted = false;
  bool operator==(const VoteResponse&) const = default;
};
struct LogEntry {
  std::uint64_t term = 0;
  Block block;
  bool operator==(const LogEntry&) const = default;
};
struct AppendEntries {
  std::uint64_t term = 0;
  std::uint64_t prev_index = 0;
  std::uint64_t prev_term = 0;
  std::vector<LogEntry> entries;
  std::uint64_t leader_commit = 0;
  bool operator==(const AppendEntries&) const = default;
};
struct AppendResponse {
  std::uint64_t term = 0;
  bool success = false;
  std::uint64_t match_index = 0;
  bool operator==(const AppendResponse&) const = default;
};

// Clique.
struct NewBlock {
  Block block;
  bool operator==(const NewBlock&) const = default;
};
struct BlockRequest {
  std::uint64_t from_height = 0;
  bool operator==(const BlockRequest&) const = default;
};
struct BlockResponse {
  std::vector<Block> blocks;
  bool operator==(const BlockResponse&) const = default;
};

}  // namespace msg

using Payload =
    std::variant<msg::ClientSubmit, msg::Receipt, msg::TxForward, msg::PrePrepare, msg::Prepare, msg::Commit,
                 msg::ViewChange, msg::NewView, msg::SyncRequest, msg::SyncResponse, msg::RequestVote,
                 msg::VoteResponse, msg::AppendEntries, msg::AppendResponse, msg::NewBlock, msg::BlockRequest,
                 msg::BlockResponse>;

enum class MessageFamily { Client, TxDissemination, Consensus, Sync };

constexpr std::string_view to_string(MessageFamily f) {
  switch (f) {
    case MessageFamily::Client: return "client";
    case MessageFamily::TxDissemination: return "tx";
    case MessageFamily::Consensus: return "consensus";
    case MessageFamily::Sync: return "sync";
  }
  return "unknown";
}

namespace detail {

template <class T>
struct PayloadTraits;

#define CHAOSBFT_PAYLOAD(T, NAME, FAMILY)                        \
  template <>                                                    \
  struct PayloadTraits<msg::T> {                                 \
    static constexpr std::string_view name = NAME;               \
    static constexpr MessageFamily family = MessageFamily::FAMILY; \
  };

CHAOSBFT_PAYLOAD(ClientSubmit, "ClientSubmit", Client)
CHAOSBFT_PAYLOAD(Receipt, "Receipt", Client)
CHAOSBFT_PAYLOAD(TxForward, "TxForward", TxDissemination)
CHAOSBFT_PAYLOAD(PrePrepare, "PrePrepare", Consensus)
CHAOSBFT_PAYLOAD(Prepare, "Prepare", Consensus)
CHAOSBFT_PAYLOAD(Commit, "Commit", Consensus)
CHAOSBFT_PAYLOAD(ViewChange, "ViewChange", Consensus)
CHAOSBFT_PAYLOAD(NewView, "NewView", Consensus)
CHAOSBFT_PAYLOAD(SyncRequest, "SyncRequest", Sync)
CHAOSBFT_PAYLOAD(SyncResponse, "SyncResponse", Sync)
CHAOSBFT_PAYLOAD(RequestVote, "RequestVote", Consensus)
CHAOSBFT_PAYLOAD(VoteResponse, "VoteResponse", Consensus)
CHAOSBFT_PAYLOAD(AppendEntries, "AppendEntries", Consensus)
CHAOSBFT_PAYLOAD(AppendResponse, "AppendResponse", Consensus)
CHAOSBFT_PAYLOAD(NewBlock, "NewBlock", Consensus)
CHAOSBFT_PAYLOAD(BlockRequest, "BlockRequest", Sync)
CHAOSBFT_PAYLOAD(BlockResponse, "BlockResponse", Sync)

#undef CHAOSBFT_PAYLOAD

}  // namespace detail

inline std::string_view payload_name(const Payload& p) {
  return std::visit([](const auto& v) { return detail::PayloadTraits<std::decay_t<decltype(v)>>::name; }, p);
}

inline MessageFamily payload_family(const Payload& p) {
  return std::visit([](const auto& v) { return detail::PayloadTraits<std::decay_t<decltype(v)>>::family; }, p);
}

/// A payload in flight between two distinct nodes.
struct Message {
  std::uint64_t id = 0;
  NodeId src = 0;
  NodeId dst = 0;
  Payload payload;
  bool corrupted = false;
  SimTime sent_at;
};

}  // namespace chaosbft
