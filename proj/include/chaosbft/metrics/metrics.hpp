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
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chaosbft/ledger/block.hpp"
#include "chaosbft/net/fault.hpp"
#include "chaosbft/sim/time.hpp"

namespace chaosbft {

enum class TxStatus { Pending, Committed, Rejected, Expired };

constexpr std::string_view to_string(TxStatus s) {
  switch (s) {
    case TxStatus::Pending: return "Pending";
    case TxStatus::Committed: return "Committed";
    case TxStatus::Rejected: return "Rejected";
    case TxStatus::Expired: return "Expired";
  }
  return "Unknown";
}

struct TxRecord {
  TxId id = 0;
  SimTime created_at;
  std::optional<SimTime> committed_at;
  TxStatus status = TxStatus::Pending;
  NodeId endpoint = 0;
  bool timed_out = false;

  Millis latency() const { return committed_at ? *committed_at - created_at : 0; }
};

class ZeroRuntime : public std::domain_error {
 public:
  ZeroRuntime() : std::domain_error("runtime is zero") {}
};

class NoCommittedTransactions : public std::domain_error {
 public:
  NoCommittedTransactions() : std::domain_error("no committed transactions") {}
};

class NoBlocksCreated : public std::domain_error {
 public:
  NoBlocksCreated() : std::domain_error("no blocks created") {}
};

/// Committed transactions over a runtime, kept as the exact ratio.
struct Throughput {
  std::uint64_t committed = 0;
  Millis runtime_ms = 0;

  double tps() const { return static_cast<double>(committed) * 1000.0 / static_cast<double>(runtime_ms); }
};

inline Throughput compute_throughput(std::uint64_t committed, Millis runtime_ms) {
  if (runtime_ms == 0) throw ZeroRuntime();
  return Throughput{committed, runtime_ms};
}

/// Commits with committed_at in [from, to].
inline Throughput compute_throughput(const std::vector<TxRecord>& records, SimTime from, SimTime to) {
  std::uint64_t n = 0;
  for (const auto& r : records) {
    if (r.committed_at && *r.committed_at >= from && *r.committed_at <= to) ++n;
  }
  return compute_throughput(n, to - from);
}

struct LatencyStats {
  std::uint64_t count = 0;
  std::uint64_t sum_ms = 0;
  Millis min_ms = 0;
  Millis max_ms = 0;
  /// Exact median; the mean of the middle pair when count is even.
  double median_ms = 0;

  double mean_ms() const { return static_cast<double>(sum_ms) / static_cast<double>(count); }
};

inline LatencyStats compute_latency(std::vector<Millis> latencies) {
  if (latencies.empty()) throw NoCommittedTransactions();
  std::sort(latencies.begin(), latencies.end());
  LatencyStats s;
  s.count = latencies.size();
  for (auto l : latencies) s.sum_ms += l;
  s.min_ms = latencies.front();
  s.max_ms = latencies.back();
  const std::size_t mid = latencies.size() / 2;
  s.median_ms = latencies.size() % 2 == 1
                    ? static_cast<double>(latencies[mid])
                    : (static_cast<double>(latencies[mid - 1]) + static_cast<double>(latencies[mid])) / 2.0;
  return s;
}

inline std::optional<LatencyStats> try_latency(std::vector<Millis> latencies) {
  if (latencies.empty()) return std::nullopt;
  return compute_latency(std::move(latencies));
}

struct SuccessRate {
  std::uint64_t committed = 0;
  std::uint64_t decided = 0;

  double value() const { return static_cast<double>(committed) / static_cast<double>(decided); }
};

/// `created` maps proposal digest to height. A proposal counts once its
/// height has been decided, i.e. is at or below `decided_height`.
inline SuccessRate compute_success_rate(const std::map<Digest, std::uint64_t>& created,
                                        const std::set<Digest>& committed, std::uint64_t decided_height) {
  SuccessRate sr;
  for (const auto& [digest, height] : created) {
    if (height > decided_height) continue;
    ++sr.decided;
    if (committed.count(digest) != 0) ++sr.committed;
  }
  if (sr.decided == 0) throw NoBlocksCreated();
  return sr;
}

/// Throughput and median latency over commits in [from, to).
struct IntervalStats {
  double throughput_tps = 0;
  std::optional<double> median_latency_ms;
  std::uint64_t committed = 0;
};

inline IntervalStats interval_stats(const std::vector<TxRecord>& records, SimTime from, SimTime to) {
  IntervalStats out;
  std::vector<Millis> lat;
  for (const auto& r : records) {
    if (r.committed_at && *r.committed_at >= from && *r.committed_at < to) lat.push_back(r.latency());
  }
  out.committed = lat.size();
  if (to > from) out.throughput_tps = static_cast<double>(lat.size()) * 1000.0 / static_cast<double>(to - from);
  if (auto s = try_latency(std::move(lat))) out.median_latency_ms = s->median_ms;
  return out;
}

struct MetricsWindow {
  Millis start_ms = 0;
  Millis length_ms = 0;
  std::uint64_t committed_tx = 0;
  double throughput_tps = 0;
  std::optional<double> median_latency_ms;
  std::optional<double> running_avg_latency_ms;
  std::uint64_t committed_blocks = 0;
  std::uint64_t created_blocks = 0;
  std::string active_faults;
};

struct MetricsReport {
  std::string protocol;
  std::uint64_t seed = 0;
  Millis horizon_ms = 0;
  Millis measure_after_ms = 0;
  Throughput tp;
  std::optional<LatencyStats> latency;
  std::optional<SuccessRate> sr;
  std::uint64_t blocks_created = 0;
  std::uint64_t blocks_committed = 0;
  std::uint64_t tx_created = 0;
  std::uint64_t tx_committed = 0;
  std::uint64_t tx_pending = 0;
  std::uint64_t tx_rejected = 0;
  std::uint64_t client_timeouts = 0;
  std::uint64_t phantom_commits = 0;
  std::vector<MetricsWindow> windows;
};

/// Accumulates TxRecords and block events during a run. Block counts use
/// honest nodes only. A transaction is committed when its endpoint commits it.
class MetricsCollector {
 public:
  MetricsCollector(std::vector<NodeId> honest, Millis window_ms = 1000) : window_ms_(window_ms) {
    if (window_ms_ == 0) throw std::invalid_argument("window length must be positive");
    honest_.insert(honest.begin(), honest.end());
  }

  void on_tx_created(const Transaction& tx, NodeId endpoint) {
    TxRecord r;
    r.id = tx.id;
    r.created_at = tx.created_at;
    r.endpoint = endpoint;
    index_[tx.id] = records_.size();
    records_.push_back(r);
  }

  void on_client_timeout(TxId id) {
    if (auto* r = find(id)) r->timed_out = true;
  }

  void on_reject(TxId id) {
    if (auto* r = find(id); r && r->status == TxStatus::Pending) r->status = TxStatus::Rejected;
  }

  void on_proposal(const Block& b, SimTime now) {
    if (created_.emplace(b.digest, b.height).second) created_at_.push_back(now);
  }

  void on_commit(NodeId node, const Block& b, SimTime now) {
    if (honest_.count(node) != 0) {
      if (committed_.insert(b.digest).second) committed_block_at_.push_back(now);
      decided_height_ = std::max(decided_height_, b.height);
    }
    for (const auto& tx : b.txs) {
      TxRecord* r = find(tx.id);
      if (r == nullptr) {
        ++phantom_;
        continue;
      }
      if (r->endpoint != node || r->committed_at) continue;
      r->committed_at = now;
      r->status = TxStatus::Committed;
    }
  }

  const std::vector<TxRecord>& records() const { return records_; }
  std::uint64_t phantom_commits() const { return phantom_; }

  MetricsReport finish(std::string protocol, std::uint64_t seed, SimTime horizon, SimTime measure_after,
                       const std::vector<FaultSpec>& faults = {}) {
    MetricsReport rep;
    rep.protocol = std::move(protocol);
    rep.seed = seed;
    rep.horizon_ms = horizon.ticks;
    rep.measure_after_ms = measure_after.ticks;

    std::vector<Millis> lat;
    for (auto& r : records_) {
      if (r.status == TxStatus::Pending) r.status = TxStatus::Expired;
      if (r.status == TxStatus::Expired) ++rep.tx_pending;
      if (r.status == TxStatus::Rejected) ++rep.tx_rejected;
      if (r.timed_out) ++rep.client_timeouts;
      if (r.committed_at && *r.committed_at >= measure_after && *r.committed_at <= horizon) {
        lat.push_back(r.latency());
      }
    }
    rep.tx_created = records_.size();
    rep.tx_committed = lat.size();
    rep.tp = compute_throughput(lat.size(), horizon - measure_after);
    rep.latency = try_latency(std::move(lat));
    rep.blocks_created = created_.size();
    rep.blocks_committed = committed_.size();
    rep.phantom_commits = phantom_;
    try {
      rep.sr = compute_success_rate(created_, committed_, decided_height_);
    } catch (const NoBlocksCreated&) {
      rep.sr.reset();
    }
    rep.windows = windows(horizon, faults);
    return rep;
  }

 private:
  TxRecord* find(TxId id) {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &records_[it->second];
  }

  std::vector<MetricsWindow> windows(SimTime horizon, const std::vector<FaultSpec>& faults) const {
    const std::size_t n = std::max<std::size_t>(1, (horizon.ticks + window_ms_ - 1) / window_ms_);
    auto slot = [&](SimTime t) { return std::min<std::size_t>(t.ticks / window_ms_, n - 1); };
    std::vector<MetricsWindow> out(n);
    std::vector<std::vector<Millis>> lat(n);
    for (const auto& r : records_) {
      if (!r.committed_at || *r.committed_at > horizon) continue;
      lat[slot(*r.committed_at)].push_back(r.latency());
    }
    for (auto t : created_at_) {
      if (t <= horizon) ++out[slot(t)].created_blocks;
    }
    for (auto t : committed_block_at_) {
      if (t <= horizon) ++out[slot(t)].committed_blocks;
    }
    std::uint64_t run_sum = 0;
    std::uint64_t run_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      auto& w = out[i];
      w.start_ms = i * window_ms_;
      w.length_ms = i + 1 == n ? std::max<Millis>(horizon.ticks - w.start_ms, 1) : window_ms_;
      w.committed_tx = lat[i].size();
      w.throughput_tps = static_cast<double>(w.committed_tx) * 1000.0 / static_cast<double>(w.length_ms);
      for (auto l : lat[i]) run_sum += l;
      run_count += lat[i].size();
      if (auto s = try_latency(std::move(lat[i]))) w.median_latency_ms = s->median_ms;
      if (run_count > 0) w.running_avg_latency_ms = static_cast<double>(run_sum) / static_cast<double>(run_count);
      std::string kinds;
      const SimTime ws{w.start_ms};
      const SimTime we{w.start_ms + w.length_ms};
      for (const auto& f : faults) {
        if (f.start < we && ws < f.end) {
          if (!kinds.empty()) kinds += '+';
          kinds += to_string(f.kind);
        }
      }
      w.active_faults = kinds.empty() ? "none" : kinds;
    }
    return out;
  }

  Millis window_ms_;
  std::set<NodeId> honest_;
  std::vector<TxRecord> records_;
  std::map<TxId, std::size_t> index_;
  std::map<Digest, std::uint64_t> created_;
  std::vector<SimTime> created_at_;
  std::set<Digest> committed_;
  std::vector<SimTime> committed_block_at_;
  std::uint64_t decided_height_ = 0;
  std::uint64_t phantom_ = 0;
};

inline void write_windows_csv(std::ostream& os, const MetricsReport& rep) {
  os << "window_start_ms,throughput_tps,median_latency_ms,running_avg_latency_ms,committed_blocks,created_blocks,"
        "active_faults\n";
  auto opt = [&](const std::optional<double>& v) {
    if (v) {
      os << nlohmann::json(*v).dump();
    } else {
      os << "null";
    }
  };
  for (const auto& w : rep.windows) {
    os << w.start_ms << ',' << nlohmann::json(w.throughput_tps).dump() << ',';
    opt(w.median_latency_ms);
    os << ',';
    opt(w.running_avg_latency_ms);
    os << ',' << w.committed_blocks << ',' << w.created_blocks << ',' << w.active_faults << '\n';
  }
}

/// Flat aggregate document. Absent values are JSON null.
inline nlohmann::ordered_json report_json(const MetricsReport& rep) {
  nlohmann::ordered_json j;
  j["protocol"] = rep.protocol;
  j["seed"] = rep.seed;
  j["tp"] = rep.tp.tps();
  j["avg_latency_ms"] = rep.latency ? nlohmann::ordered_json(rep.latency->mean_ms()) : nlohmann::ordered_json();
  j["median_latency_ms"] = rep.latency ? nlohmann::ordered_json(rep.latency->median_ms) : nlohmann::ordered_json();
  j["success_rate"] = rep.sr ? nlohmann::ordered_json(rep.sr->value()) : nlohmann::ordered_json();
  j["blocks_created"] = rep.blocks_created;
  j["blocks_committed"] = rep.blocks_committed;
  j["tx_committed"] = rep.tx_committed;
  j["tx_pending"] = rep.tx_pending;
  j["tx_created"] = rep.tx_created;
  j["tx_rejected"] = rep.tx_rejected;
  j["client_timeouts"] = rep.client_timeouts;
  j["phantom_commits"] = rep.phantom_commits;
  j["runtime_ms"] = rep.tp.runtime_ms;
  j["horizon_ms"] = rep.horizon_ms;
  j["measure_after_ms"] = rep.measure_after_ms;
  j["latency_sum_ms"] = rep.latency ? rep.latency->sum_ms : 0;
  j["max_latency_ms"] = rep.latency ? nlohmann::ordered_json(rep.latency->max_ms) : nlohmann::ordered_json();
  j["sr_committed"] = rep.sr ? rep.sr->committed : 0;
  j["sr_decided"] = rep.sr ? rep.sr->decided : 0;
  return j;
}

}  // namespace chaosbft
