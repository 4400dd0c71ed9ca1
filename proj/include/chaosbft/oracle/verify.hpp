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

// Recomputes the headline metrics from exported artifacts alone: the event
// log supplies creation times and proposals, the chain dumps supply commits.
// Nothing here reads the metrics module.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chaosbft/sim/event_log.hpp"

namespace chaosbft::oracle {

class OracleInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DumpedBlock {
  std::uint64_t height = 0;
  std::uint64_t digest = 0;
  std::uint64_t committed_at = 0;
  std::vector<std::uint64_t> txs;
};

struct DumpedChain {
  std::uint32_t node = 0;
  std::vector<DumpedBlock> blocks;
};

struct Recomputed {
  std::uint64_t horizon_ms = 0;
  std::uint64_t measure_after_ms = 0;
  std::uint64_t tx_created = 0;
  std::uint64_t tx_committed = 0;
  std::uint64_t runtime_ms = 0;
  double tp = 0;
  std::uint64_t latency_sum_ms = 0;
  std::optional<double> avg_latency_ms;
  std::optional<double> median_latency_ms;
  std::uint64_t blocks_created = 0;
  std::uint64_t blocks_committed = 0;
  std::uint64_t sr_committed = 0;
  std::uint64_t sr_decided = 0;
  std::optional<double> success_rate;
  /// Honest chains disagreeing at a height, and commits of unknown txs.
  std::vector<std::string> conflicts;
};

namespace detail {

inline std::uint64_t num(std::string_view s, const char* what) {
  std::uint64_t v = 0;
  if (s.empty()) throw OracleInputError(std::string("empty ") + what);
  for (char c : s) {
    if (c < '0' || c > '9') throw OracleInputError(std::string("bad ") + what + ": " + std::string(s));
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

inline std::uint64_t hex(std::string_view s) {
  std::uint64_t v = 0;
  if (s.empty()) throw OracleInputError("empty digest");
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') {
      v |= static_cast<std::uint64_t>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      v |= static_cast<std::uint64_t>(c - 'a' + 10);
    } else {
      throw OracleInputError("bad digest: " + std::string(s));
    }
  }
  return v;
}

inline std::vector<std::uint64_t> id_list(std::string_view s) {
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto sp = s.find(' ', pos);
    if (sp == std::string_view::npos) sp = s.size();
    if (sp > pos) out.push_back(num(s.substr(pos, sp - pos), "tx id"));
    pos = sp + 1;
  }
  return out;
}

inline std::string_view need(std::string_view detail, std::string_view key) {
  auto v = detail_field(detail, key);
  if (!v) throw OracleInputError("missing " + std::string(key) + " in '" + std::string(detail) + "'");
  return *v;
}

}  // namespace detail

/// Parses a chain_<i>.csv dump.
inline DumpedChain parse_chain_dump(std::string_view text, std::optional<std::uint32_t> node = std::nullopt) {
  DumpedChain c;
  bool have_node = false;
  if (node) {
    c.node = *node;
    have_node = true;
  }
  bool header = false;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.rfind("# node=", 0) == 0 && !node) {
        c.node = static_cast<std::uint32_t>(detail::num(line.substr(7), "node"));
        have_node = true;
      }
      continue;
    }
    if (!header) {
      header = true;
      continue;
    }
    std::vector<std::string_view> cols;
    std::size_t p = 0;
    for (int i = 0; i < 7; ++i) {
      auto comma = line.find(',', p);
      if (comma == std::string_view::npos) throw OracleInputError("short chain row: " + std::string(line));
      cols.push_back(line.substr(p, comma - p));
      p = comma + 1;
    }
    cols.push_back(line.substr(p));
    DumpedBlock b;
    b.height = detail::num(cols[0], "height");
    b.digest = detail::hex(cols[1]);
    b.committed_at = detail::num(cols[4], "committed_at");
    b.txs = detail::id_list(cols[7]);
    if (b.txs.size() != detail::num(cols[3], "tx_count")) {
      throw OracleInputError("tx_count disagrees with tx list: " + std::string(line));
    }
    c.blocks.push_back(std::move(b));
  }
  if (!have_node) throw OracleInputError("chain dump does not name its node");
  return c;
}

inline double median_of(std::vector<std::uint64_t> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  if (v.size() % 2 == 1) return static_cast<double>(v[m]);
  return (static_cast<double>(v[m - 1]) + static_cast<double>(v[m])) / 2.0;
}

inline Recomputed recompute(std::string_view events, const std::vector<DumpedChain>& chains) {
  Recomputed out;
  const EventLog log = EventLog::parse(events);

  bool have_meta = false;
  std::set<std::uint32_t> honest;
  struct Created {
    std::uint64_t at = 0;
    std::uint32_t endpoint = 0;
  };
  std::map<std::uint64_t, Created> created;
  std::map<std::uint64_t, std::uint64_t> proposals;

  for (const auto& r : log.records()) {
    if (r.kind == "Meta") {
      have_meta = true;
      out.horizon_ms = detail::num(detail::need(r.detail, "horizon_ms"), "horizon");
      out.measure_after_ms = detail::num(detail::need(r.detail, "measure_after_ms"), "measure_after");
      for (auto id : detail::id_list(detail::need(r.detail, "honest"))) honest.insert(static_cast<std::uint32_t>(id));
    } else if (r.kind == "TxCreated") {
      if (!r.node) throw OracleInputError("TxCreated without endpoint");
      created[detail::num(detail::need(r.detail, "tx"), "tx")] = Created{r.tick, *r.node};
    } else if (r.kind == "ProposalCreated") {
      proposals.emplace(detail::hex(detail::need(r.detail, "digest")),
                        detail::num(detail::need(r.detail, "height"), "height"));
    }
  }
  if (!have_meta) throw OracleInputError("event log has no Meta record");
  out.tx_created = created.size();
  out.blocks_created = proposals.size();

  // Commit time of each tx at its endpoint.
  std::vector<std::uint64_t> latencies;
  std::set<std::uint64_t> committed_digests;
  std::uint64_t decided = 0;
  std::map<std::uint64_t, std::pair<std::uint64_t, std::uint32_t>> by_height;
  for (const auto& c : chains) {
    const bool is_honest = honest.count(c.node) != 0;
    for (const auto& b : c.blocks) {
      if (is_honest) {
        committed_digests.insert(b.digest);
        decided = std::max(decided, b.height);
        auto [it, fresh] = by_height.try_emplace(b.height, b.digest, c.node);
        if (!fresh && it->second.first != b.digest) {
          out.conflicts.push_back("height " + std::to_string(b.height) + ": node " + std::to_string(it->second.second) +
                                  " vs node " + std::to_string(c.node));
        }
      }
      for (auto tx : b.txs) {
        auto it = created.find(tx);
        if (it == created.end()) {
          out.conflicts.push_back("node " + std::to_string(c.node) + " committed unknown tx " + std::to_string(tx));
          continue;
        }
        if (it->second.endpoint != c.node) continue;
        if (b.committed_at >= out.measure_after_ms && b.committed_at <= out.horizon_ms) {
          latencies.push_back(b.committed_at - it->second.at);
        }
      }
    }
  }

  out.tx_committed = latencies.size();
  out.runtime_ms = out.horizon_ms - out.measure_after_ms;
  if (out.runtime_ms > 0) {
    out.tp = static_cast<double>(out.tx_committed) * 1000.0 / static_cast<double>(out.runtime_ms);
  }
  for (auto l : latencies) out.latency_sum_ms += l;
  if (!latencies.empty()) {
    out.avg_latency_ms = static_cast<double>(out.latency_sum_ms) / static_cast<double>(latencies.size());
    out.median_latency_ms = median_of(latencies);
  }
  out.blocks_committed = committed_digests.size();
  for (const auto& [digest, height] : proposals) {
    if (height > decided) continue;
    ++out.sr_decided;
    if (committed_digests.count(digest)) ++out.sr_committed;
  }
  if (out.sr_decided > 0) {
    out.success_rate = static_cast<double>(out.sr_committed) / static_cast<double>(out.sr_decided);
  }
  return out;
}

/// Differences between the recomputation and a report. Empty means the
/// report is reproduced exactly.
inline std::vector<std::string> compare_report(const Recomputed& r, const nlohmann::json& report) {
  std::vector<std::string> diffs;
  auto field = [&](const char* key) -> const nlohmann::json& {
    if (!report.contains(key)) throw OracleInputError(std::string("report lacks ") + key);
    return report.at(key);
  };
  auto u = [&](const char* key, std::uint64_t want) {
    if (field(key).get<std::uint64_t>() != want) {
      diffs.push_back(std::string(key) + ": report " + field(key).dump() + ", recomputed " + std::to_string(want));
    }
  };
  auto d = [&](const char* key, std::optional<double> want) {
    const auto& got = field(key);
    const bool same = want ? (got.is_number() && got.get<double>() == *want) : got.is_null();
    if (!same) {
      diffs.push_back(std::string(key) + ": report " + got.dump() + ", recomputed " +
                      (want ? nlohmann::json(*want).dump() : std::string("null")));
    }
  };
  u("tx_committed", r.tx_committed);
  u("tx_created", r.tx_created);
  u("runtime_ms", r.runtime_ms);
  d("tp", r.tp);
  u("latency_sum_ms", r.latency_sum_ms);
  d("avg_latency_ms", r.avg_latency_ms);
  d("median_latency_ms", r.median_latency_ms);
  u("blocks_created", r.blocks_created);
  u("blocks_committed", r.blocks_committed);
  u("sr_committed", r.sr_committed);
  u("sr_decided", r.sr_decided);
  d("success_rate", r.success_rate);
  return diffs;
}

inline nlohmann::ordered_json to_json(const Recomputed& r) {
  nlohmann::ordered_json j;
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
  j["tp"] = r.tp;
  j["avg_latency_ms"] = opt(r.avg_latency_ms);
  j["median_latency_ms"] = opt(r.median_latency_ms);
  j["success_rate"] = opt(r.success_rate);
  j["tx_created"] = r.tx_created;
  j["tx_committed"] = r.tx_committed;
  j["runtime_ms"] = r.runtime_ms;
  j["latency_sum_ms"] = r.latency_sum_ms;
  j["blocks_created"] = r.blocks_created;
  j["blocks_committed"] = r.blocks_committed;
  j["sr_committed"] = r.sr_committed;
  j["sr_decided"] = r.sr_decided;
  j["conflicts"] = r.conflicts;
  return j;
}

}  // namespace chaosbft::oracle
