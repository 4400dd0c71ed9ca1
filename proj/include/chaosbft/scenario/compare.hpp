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
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "chaosbft/engine/engine.hpp"
#include "chaosbft/scenario/spec.hpp"

namespace chaosbft {

class IncomparableScenarios : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Ceiling {
  double tps = 0;
  std::string basis;
};

/// Analytic throughput bound with an unbounded backlog and fault-free
/// links. PBFT and Raft keep one block in flight: PBFT spends three one-way
/// hops per block (pre-prepare, prepare, commit), Raft two (append and ack).
/// Clique seals one block per period.
inline Ceiling throughput_ceiling(Protocol p, std::size_t block_size, Millis base_latency_ms, Millis period_ms) {
  const double bs = static_cast<double>(block_size);
  const double lat = static_cast<double>(std::max<Millis>(base_latency_ms, 1));
  switch (p) {
    case Protocol::Clique:
      return {bs * 1000.0 / static_cast<double>(period_ms), "block_size per period"};
    case Protocol::Pbft:
      return {bs * 1000.0 / (3.0 * lat), "block_size per three message delays (quorum rounds)"};
    case Protocol::Raft:
      return {bs * 1000.0 / (2.0 * lat), "block_size per replication round trip (leader throughput)"};
  }
  return {};
}

inline Ceiling throughput_ceiling(const ScenarioSpec& s) {
  return throughput_ceiling(s.protocol, s.engine.block_size, s.net.base_latency_ms, s.engine.clique_period_ms);
}

struct ComparedRun {
  std::string protocol;
  std::uint64_t seed = 0;
  double tp = 0;
  std::optional<double> avg_latency_ms;
  std::optional<double> median_latency_ms;
  std::optional<double> success_rate;
  Ceiling ceiling;
};

struct Comparison {
  std::vector<ComparedRun> runs;
  /// Metric name to run indices, best first.
  std::map<std::string, std::vector<std::size_t>> ranking;
};

namespace detail {

inline bool shared_key(const std::string& k) {
  static const char* prefixes[] = {"scenario.load.", "scenario.fault.", "scenario.net."};
  for (const char* p : prefixes) {
    if (k.rfind(p, 0) == 0) return true;
  }
  return k == "scenario.horizon_ms" || k == "scenario.measure_after_ms" || k == "scenario.validators";
}

inline std::map<std::string, std::string> shared_keys(const nlohmann::json& report) {
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : report.items()) {
    if (shared_key(k)) out[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  return out;
}

inline std::optional<double> opt_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

inline std::string scenario_value(const nlohmann::json& j, const std::string& key) {
  const std::string k = "scenario." + key;
  if (!j.contains(k)) throw IncomparableScenarios("report lacks " + k);
  return j.at(k).get<std::string>();
}

}  // namespace detail

/// Requires at least two reports over identical load, fault schedule,
/// network, horizon and warm-up.
inline Comparison compare_reports(const std::vector<nlohmann::json>& reports) {
  if (reports.size() < 2) throw IncomparableScenarios("need at least two reports, got " + std::to_string(reports.size()));
  const auto reference = detail::shared_keys(reports.front());
  if (reference.empty()) throw IncomparableScenarios("report 1 carries no scenario echo");
  for (std::size_t i = 1; i < reports.size(); ++i) {
    const auto keys = detail::shared_keys(reports[i]);
    for (const auto& [k, v] : reference) {
      auto it = keys.find(k);
      if (it == keys.end() || it->second != v) {
        throw IncomparableScenarios("report " + std::to_string(i + 1) + " differs in " + k);
      }
    }
    for (const auto& [k, v] : keys) {
      if (reference.count(k) == 0) throw IncomparableScenarios("report " + std::to_string(i + 1) + " differs in " + k);
    }
  }

  Comparison c;
  for (const auto& r : reports) {
    ComparedRun run;
    run.protocol = r.at("protocol").get<std::string>();
    run.seed = r.at("seed").get<std::uint64_t>();
    run.tp = r.at("tp").get<double>();
    run.avg_latency_ms = detail::opt_number(r, "avg_latency_ms");
    run.median_latency_ms = detail::opt_number(r, "median_latency_ms");
    run.success_rate = detail::opt_number(r, "success_rate");
    auto proto = parse_protocol(run.protocol);
    if (!proto) throw IncomparableScenarios("unknown protocol " + run.protocol);
    run.ceiling = throughput_ceiling(*proto, std::stoull(detail::scenario_value(r, "engine.block_size")),
                                     std::stoull(detail::scenario_value(r, "net.base_latency_ms")),
                                     std::stoull(detail::scenario_value(r, "engine.clique.period_ms")));
    c.runs.push_back(std::move(run));
  }

  auto rank = [&](const std::string& metric, auto value, bool higher_better) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < c.runs.size(); ++i) {
      if (value(c.runs[i])) idx.push_back(i);
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return higher_better ? *value(c.runs[a]) > *value(c.runs[b]) : *value(c.runs[a]) < *value(c.runs[b]);
    });
    c.ranking[metric] = idx;
  };
  rank("tp", [](const ComparedRun& r) { return std::optional<double>(r.tp); }, true);
  rank("avg_latency_ms", [](const ComparedRun& r) { return r.avg_latency_ms; }, false);
  rank("median_latency_ms", [](const ComparedRun& r) { return r.median_latency_ms; }, false);
  rank("success_rate", [](const ComparedRun& r) { return r.success_rate; }, true);
  return c;
}

inline nlohmann::ordered_json comparison_json(const Comparison& c) {
  nlohmann::ordered_json j;
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
  j["runs"] = nlohmann::ordered_json::array();
  for (const auto& r : c.runs) {
    nlohmann::ordered_json e;
    e["protocol"] = r.protocol;
    e["seed"] = r.seed;
    e["tp"] = r.tp;
    e["avg_latency_ms"] = opt(r.avg_latency_ms);
    e["median_latency_ms"] = opt(r.median_latency_ms);
    e["success_rate"] = opt(r.success_rate);
    e["ceiling_tps"] = r.ceiling.tps;
    e["ceiling_basis"] = r.ceiling.basis;
    e["ceiling_utilisation"] = r.ceiling.tps > 0 ? r.tp / r.ceiling.tps : 0.0;
    j["runs"].push_back(std::move(e));
  }
  for (const auto& [metric, order] : c.ranking) {
    nlohmann::ordered_json names = nlohmann::ordered_json::array();
    for (auto i : order) names.push_back(c.runs[i].protocol);
    j["ranking"][metric] = names;
  }
  return j;
}

inline std::string comparison_text(const Comparison& c) {
  auto fmt = [](const std::optional<double>& v, const char* f) {
    if (!v) return std::string("Null");
    char buf[32];
    std::snprintf(buf, sizeof(buf), f, *v);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "| protocol | tp (tx/s) | avg latency (ms) | median latency (ms) | SR | ceiling (tx/s) | ceiling basis |\n";
  os << "|---|---|---|---|---|---|---|\n";
  for (const auto& r : c.runs) {
    os << "| " << r.protocol << " | " << fmt(r.tp, "%.2f") << " | " << fmt(r.avg_latency_ms, "%.1f") << " | "
       << fmt(r.median_latency_ms, "%.1f") << " | " << fmt(r.success_rate, "%.4f") << " | "
       << fmt(r.ceiling.tps, "%.1f") << " | " << r.ceiling.basis << " |\n";
  }
  os << '\n';
  for (const auto& [metric, order] : c.ranking) {
    os << metric << ":";
    for (std::size_t i = 0; i < order.size(); ++i) os << (i ? " > " : " ") << c.runs[order[i]].protocol;
    os << '\n';
  }
  return os.str();
}

}  // namespace chaosbft
