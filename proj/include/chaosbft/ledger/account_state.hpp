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
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "chaosbft/ledger/block.hpp"

namespace chaosbft {

enum class LedgerErrc {
  InsufficientFunds,
  UnknownAccount,
  DuplicateAccount,
  SelfTransfer,
  EmptyProposalForbidden,
};

constexpr std::string_view to_string(LedgerErrc e) {
  switch (e) {
    case LedgerErrc::InsufficientFunds: return "InsufficientFunds";
    case LedgerErrc::UnknownAccount: return "UnknownAccount";
    case LedgerErrc::DuplicateAccount: return "DuplicateAccount";
    case LedgerErrc::SelfTransfer: return "SelfTransfer";
    case LedgerErrc::EmptyProposalForbidden: return "EmptyProposalForbidden";
  }
  return "Unknown";
}

class LedgerError : public std::runtime_error {
 public:
  explicit LedgerError(LedgerErrc code)
      : std::runtime_error(std::string(to_string(code))), code_(code) {}
  LedgerErrc code() const { return code_; }

 private:
  LedgerErrc code_;
};

/// Account balances. Transfers conserve the total supply and no balance ever
/// goes negative.
class AccountState {
 public:
  void create_account(AccountId id, std::uint64_t initial_balance) {
    if (!balances_.emplace(id, initial_balance).second) throw LedgerError(LedgerErrc::DuplicateAccount);
    supply_ += initial_balance;
  }

  bool contains(AccountId id) const { return balances_.count(id) != 0; }

  std::uint64_t balance(AccountId id) const {
    auto it = balances_.find(id);
    if (it == balances_.end()) throw LedgerError(LedgerErrc::UnknownAccount);
    return it->second;
  }

  std::size_t size() const { return balances_.size(); }

  /// Total recorded at account creation; transfers never change it.
  std::uint64_t total_supply() const { return supply_; }

  /// Sum of the balances as they stand now.
  std::uint64_t balance_sum() const {
    std::uint64_t s = 0;
    for (const auto& [id, bal] : balances_) s += bal;
    return s;
  }

  /// Applies in place. On rejection the state is untouched.
  std::optional<LedgerErrc> try_apply(const Transaction& tx) {
    if (tx.from == tx.to) return LedgerErrc::SelfTransfer;
    auto from = balances_.find(tx.from);
    auto to = balances_.find(tx.to);
    if (from == balances_.end() || to == balances_.end()) return LedgerErrc::UnknownAccount;
    if (from->second < tx.amount) return LedgerErrc::InsufficientFunds;
    from->second -= tx.amount;
    to->second += tx.amount;
    return std::nullopt;
  }

  const std::map<AccountId, std::uint64_t>& balances() const { return balances_; }

  bool operator==(const AccountState&) const = default;

 private:
  std::map<AccountId, std::uint64_t> balances_;
  std::uint64_t supply_ = 0;
};

inline AccountState create_account(AccountState state, AccountId id, std::uint64_t initial_balance) {
  state.create_account(id, initial_balance);
  return state;
}

/// Value-returning transfer; throws LedgerError and leaves the input alone on
/// rejection.
inline AccountState apply_transaction(AccountState state, const Transaction& tx) {
  if (auto err = state.try_apply(tx)) throw LedgerError(*err);
  return state;
}

/// Copy-on-write view used to check a run of transactions without copying
/// the whole account map.
class StateOverlay {
 public:
  explicit StateOverlay(const AccountState& base) : base_(&base) {}

  std::optional<LedgerErrc> try_apply(const Transaction& tx) {
    if (tx.from == tx.to) return LedgerErrc::SelfTransfer;
    auto from = lookup(tx.from);
    auto to = lookup(tx.to);
    if (!from || !to) return LedgerErrc::UnknownAccount;
    if (*from < tx.amount) return LedgerErrc::InsufficientFunds;
    touched_[tx.from] = *from - tx.amount;
    touched_[tx.to] = lookup(tx.to).value() + tx.amount;
    return std::nullopt;
  }

 private:
  std::optional<std::uint64_t> lookup(AccountId id) const {
    if (auto it = touched_.find(id); it != touched_.end()) return it->second;
    if (!base_->contains(id)) return std::nullopt;
    return base_->balance(id);
  }

  const AccountState* base_;
  std::map<AccountId, std::uint64_t> touched_;
};

}  // namespace chaosbft
