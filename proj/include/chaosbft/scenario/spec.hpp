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

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chaosbft/engine/engine.hpp"
#include "chaosbft/net/chaos_net.hpp"
#include "chaosbft/net/fault.hpp"
#include "chaosbft/workload/workload.hpp"

namespace chaosbft {

// Scenario files are flat `key = value` lines. `#` starts a comment line.
// Indexed sections use dotted prefixes counting from 1:
//
//   protocol = clique
//   validators = 6
//   load.stage.1.users = 250
//   load.stage.1.spawn_rate = 3
//   load.stage.1.hold_ms = 60000
//   fault.1.kind = delay
//   fault.1.start_ms = 20000
//   fault.1.end_ms = 40000
//   fault.1.mean_ms = 100
//
// Omitted keys take their defaults. `echo_scenario` writes every key back
// with its resolved value.

/// Jitter of a delay fault that does not set one.
inline constexpr Millis kDefaultDelayJitterMs = 10;
/// A corrupt fault without a probability tampers with every outbound message.
inline constexpr double kDefaultCorruptProbability = 1.0;

struct ScenarioSpec {
  Protocol protocol = Protocol::Pbft;
  std::size_t validators = 6;
  EngineParams engine;
  NetworkConfig net;
  LoadProfile load;
  std::vector<FaultSpec> faults;
  std::uint64_t seed = 1;
  /// Resolved at parse time; defaults to the end of the load profile.
  Millis horizon_ms = 0;
  /// Warm-up excluded from the aggregates; defaults to the first ramp.
  Millis measure_after_ms = 0;
  Millis window_ms = 1000;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : std::runtime_error("line " + std::to_string(line) + ": " + reason), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, const std::string& reason)
      : std::runtime_error(field + ": " + reason), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::string fmt_double(double v) { return nlohmann::json(v).dump(); }

struct Entry {
  std::string value;
  std::size_t line = 0;
};

class Reader {
 public:
  explicit Reader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  template <class T>
  void uint(const std::string& key, T& out) {
    auto* e = take(key);
    if (e == nullptr) return;
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (ec != std::errc{} || p != e->value.data() + e->value.size()) {
      throw ParseError(e->line, key + ": expected a non-negative integer, got '" + e->value + "'");
    }
    out = static_cast<T>(v);
  }

  void real(const std::string& key, double& out) {
    auto* e = take(key);
    if (e == nullptr) return;
    double v = 0;
    auto [p, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (ec != std::errc{} || p != e->value.data() + e->value.size()) {
      throw ParseError(e->line, key + ": expected a number, got '" + e->value + "'");
    }
    out = v;
  }

  void flag(const std::string& key, bool& out) {
    auto* e = take(key);
    if (e == nullptr) return;
    if (e->value == "true") {
      out = true;
    } else if (e->value == "false") {
      out = false;
    } else {
      throw ParseError(e->line, key + ": expected true or false, got '" + e->value + "'");
    }
  }

  /// Raw text plus its line, for enum-like keys.
  const Entry* text(const std::string& key) { return take(key); }

  void nodes(const std::string& key, std::vector<NodeId>& out) {
    auto* e = take(key);
    if (e == nullptr) return;
    out.clear();
    std::istringstream is(e->value);
    std::string tok;
    while (is >> tok) {
      std::uint32_t v = 0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc{} || p != tok.data() + tok.size()) {
        throw ParseError(e->line, key + ": bad node id '" + tok + "'");
      }
      out.push_back(v);
    }
  }

  /// Largest N such that some key starts with `prefix + N + "."`.
  std::size_t count_indexed(const std::string& prefix) const {
    std::size_t n = 0;
    for (const auto& [k, e] : entries_) {
      if (k.rfind(prefix, 0) != 0) continue;
      auto rest = std::string_view(k).substr(prefix.size());
      auto dot = rest.find('.');
      if (dot == std::string_view::npos) throw ParseError(e.line, "missing field after '" + k + "'");
      std::size_t idx = 0;
      auto [p, ec] = std::from_chars(rest.data(), rest.data() + dot, idx);
      if (ec != std::errc{} || p != rest.data() + dot || idx == 0) {
        throw ParseError(e.line, "bad index in '" + k + "'");
      }
      n = std::max(n, idx);
    }
    return n;
  }

  void finish() const {
    if (!entries_.empty()) {
      const auto& [k, e] = *entries_.begin();
      throw ParseError(e.line, "unknown key '" + k + "'");
    }
  }

 private:
  Entry* take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    taken_ = std::move(it->second);
    entries_.erase(it);
    return &taken_;
  }

  std::map<std::string, Entry> entries_;
  Entry taken_;
};

}  // namespace detail

/// Checks cross-field constraints. Throws ValidationError naming the key.
inline void validate_scenario(const ScenarioSpec& s) {
  if (s.validators == 0) throw ValidationError("validators", "must be at least 1");
  if (s.protocol == Protocol::Pbft && s.validators < 4) throw ValidationError("validators", "pbft needs at least 4");
  if (s.protocol == Protocol::Raft && s.validators < 3) throw ValidationError("validators", "raft needs at least 3");
  if (s.engine.block_size == 0) throw ValidationError("engine.block_size", "must be at least 1");
  if (s.engine.raft_election_min_ms == 0 || s.engine.raft_election_min_ms > s.engine.raft_election_max_ms) {
    throw ValidationError("engine.raft.election_min_ms", "must be positive and not exceed election_max_ms");
  }
  if (s.engine.raft_heartbeat_ms == 0) throw ValidationError("engine.raft.heartbeat_ms", "must be positive");
  if (s.engine.clique_period_ms == 0) throw ValidationError("engine.clique.period_ms", "must be positive");
  if (s.engine.pbft_view_timeout_ms == 0) throw ValidationError("engine.pbft.view_timeout_ms", "must be positive");
  if (s.window_ms == 0) throw ValidationError("window_ms", "must be positive");
  if (s.horizon_ms == 0) throw ValidationError("horizon_ms", "must be positive");
  if (s.measure_after_ms >= s.horizon_ms) throw ValidationError("measure_after_ms", "must be before the horizon");
  try {
    check_profile(s.load);
  } catch (const ProfileInfeasible& e) {
    throw ValidationError("load", e.what());
  }
  for (std::size_t i = 0; i < s.faults.size(); ++i) {
    const auto& f = s.faults[i];
    const std::string key = "fault." + std::to_string(i + 1);
    try {
      validate_fault(f, i, s.validators);
    } catch (const UnknownNode& e) {
      throw ValidationError(key + ".nodes", e.what());
    } catch (const MalformedWindow& e) {
      throw ValidationError(key, e.what());
    }
    if (f.end.ticks > s.horizon_ms) throw ValidationError(key + ".end_ms", "window extends beyond the horizon");
  }
}

/// Parses scenario text. Unset horizon and warm-up are derived from the
/// load profile before validation.
inline ScenarioSpec parse_scenario(std::string_view text) {
  std::map<std::string, detail::Entry> entries;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++lineno;
    auto line = detail::trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(lineno, "expected 'key = value'");
    std::string key(detail::trim(line.substr(0, eq)));
    std::string value(detail::trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError(lineno, "empty key");
    if (entries.count(key) != 0) throw ParseError(lineno, "duplicate key '" + key + "'");
    entries[key] = detail::Entry{value, lineno};
    if (end == text.size()) break;
  }

  ScenarioSpec s;
  detail::Reader r(std::move(entries));

  if (auto* e = r.text("protocol")) {
    auto p = parse_protocol(e->value);
    if (!p) throw ParseError(e->line, "protocol: expected pbft, raft or clique, got '" + e->value + "'");
    s.protocol = *p;
  }
  r.uint("validators", s.validators);
  r.uint("seed", s.seed);
  const bool has_horizon = r.has("horizon_ms");
  const bool has_measure = r.has("measure_after_ms");
  r.uint("horizon_ms", s.horizon_ms);
  r.uint("measure_after_ms", s.measure_after_ms);
  r.uint("window_ms", s.window_ms);

  auto& ep = s.engine;
  r.uint("engine.block_size", ep.block_size);
  r.uint("engine.block_interval_ms", ep.block_interval_ms);
  r.flag("engine.empty_blocks", ep.empty_blocks);
  r.uint("engine.sync_retry_ms", ep.sync_retry_ms);
  r.uint("engine.pbft.view_timeout_ms", ep.pbft_view_timeout_ms);
  r.uint("engine.raft.election_min_ms", ep.raft_election_min_ms);
  r.uint("engine.raft.election_max_ms", ep.raft_election_max_ms);
  r.uint("engine.raft.heartbeat_ms", ep.raft_heartbeat_ms);
  r.uint("engine.clique.period_ms", ep.clique_period_ms);
  r.uint("engine.clique.confirmation_depth", ep.clique_confirmation_depth);
  r.uint("engine.clique.backoff_unit_ms", ep.clique_backoff_unit_ms);
  r.uint("engine.clique.min_backoff_ms", ep.clique_min_backoff_ms);

  r.uint("net.base_latency_ms", s.net.base_latency_ms);
  r.uint("net.base_jitter_ms", s.net.base_jitter_ms);
  r.flag("net.faults_affect_clients", s.net.faults_affect_clients);

  auto& lp = s.load;
  if (const std::size_t stages = r.count_indexed("load.stage."); stages > 0) {
    lp.stages.assign(stages, LoadStage{});
    for (std::size_t i = 0; i < stages; ++i) {
      const std::string k = "load.stage." + std::to_string(i + 1) + ".";
      r.uint(k + "users", lp.stages[i].target_users);
      r.real(k + "spawn_rate", lp.stages[i].spawn_rate);
      r.uint(k + "hold_ms", lp.stages[i].hold_ms);
    }
  }
  r.uint("load.think_min_ms", lp.think_min_ms);
  r.uint("load.think_max_ms", lp.think_max_ms);
  r.uint("load.workers", lp.workers);
  if (auto* e = r.text("load.mode")) {
    if (e->value == "closed") {
      lp.closed_loop = true;
    } else if (e->value == "open") {
      lp.closed_loop = false;
    } else {
      throw ParseError(e->line, "load.mode: expected closed or open, got '" + e->value + "'");
    }
  }
  r.uint("load.response_timeout_ms", lp.response_timeout_ms);
  r.uint("load.amount_min", lp.amount_min);
  r.uint("load.amount_max", lp.amount_max);
  r.flag("load.scarce_funding", lp.scarce_funding);

  const std::size_t nfaults = r.count_indexed("fault.");
  s.faults.resize(nfaults);
  for (std::size_t i = 0; i < nfaults; ++i) {
    const std::string k = "fault." + std::to_string(i + 1) + ".";
    auto& f = s.faults[i];
    auto* kind = r.text(k + "kind");
    if (kind == nullptr) throw ValidationError(k + "kind", "missing");
    auto fk = parse_fault_kind(kind->value);
    if (!fk) throw ParseError(kind->line, k + "kind: expected delay, loss, corrupt or pause");
    f.kind = *fk;
    if (f.kind == FaultKind::Delay) f.jitter_ms = kDefaultDelayJitterMs;
    if (f.kind == FaultKind::Corrupt) f.probability = kDefaultCorruptProbability;
    if (!r.has(k + "start_ms")) throw ValidationError(k + "start_ms", "missing");
    if (!r.has(k + "end_ms")) throw ValidationError(k + "end_ms", "missing");
    r.uint(k + "start_ms", f.start.ticks);
    r.uint(k + "end_ms", f.end.ticks);
    r.uint(k + "mean_ms", f.mean_ms);
    r.uint(k + "jitter_ms", f.jitter_ms);
    r.real(k + "probability", f.probability);
    r.nodes(k + "nodes", f.nodes);
  }
  r.finish();

  if (!has_horizon) s.horizon_ms = profile_end(s.load);
  if (!has_measure) s.measure_after_ms = std::min(first_ramp(s.load), s.horizon_ms == 0 ? 0 : s.horizon_ms - 1);
  validate_scenario(s);
  return s;
}

inline ScenarioSpec load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read scenario file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

/// Every key with its resolved value, in a fixed order.
inline std::vector<std::pair<std::string, std::string>> scenario_entries(const ScenarioSpec& s) {
  std::vector<std::pair<std::string, std::string>> out;
  auto put = [&](std::string k, std::string v) { out.emplace_back(std::move(k), std::move(v)); };
  auto u = [](auto v) { return std::to_string(v); };
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  put("protocol", std::string(to_string(s.protocol)));
  put("validators", u(s.validators));
  put("seed", u(s.seed));
  put("horizon_ms", u(s.horizon_ms));
  put("measure_after_ms", u(s.measure_after_ms));
  put("window_ms", u(s.window_ms));
  const auto& ep = s.engine;
  put("engine.block_size", u(ep.block_size));
  put("engine.block_interval_ms", u(ep.block_interval_ms));
  put("engine.empty_blocks", b(ep.empty_blocks));
  put("engine.sync_retry_ms", u(ep.sync_retry_ms));
  put("engine.pbft.view_timeout_ms", u(ep.pbft_view_timeout_ms));
  put("engine.raft.election_min_ms", u(ep.raft_election_min_ms));
  put("engine.raft.election_max_ms", u(ep.raft_election_max_ms));
  put("engine.raft.heartbeat_ms", u(ep.raft_heartbeat_ms));
  put("engine.clique.period_ms", u(ep.clique_period_ms));
  put("engine.clique.confirmation_depth", u(ep.clique_confirmation_depth));
  put("engine.clique.backoff_unit_ms", u(ep.clique_backoff_unit_ms));
  put("engine.clique.min_backoff_ms", u(ep.clique_min_backoff_ms));
  put("net.base_latency_ms", u(s.net.base_latency_ms));
  put("net.base_jitter_ms", u(s.net.base_jitter_ms));
  put("net.faults_affect_clients", b(s.net.faults_affect_clients));
  for (std::size_t i = 0; i < s.load.stages.size(); ++i) {
    const std::string k = "load.stage." + std::to_string(i + 1) + ".";
    put(k + "users", u(s.load.stages[i].target_users));
    put(k + "spawn_rate", detail::fmt_double(s.load.stages[i].spawn_rate));
    put(k + "hold_ms", u(s.load.stages[i].hold_ms));
  }
  put("load.think_min_ms", u(s.load.think_min_ms));
  put("load.think_max_ms", u(s.load.think_max_ms));
  put("load.workers", u(s.load.workers));
  put("load.mode", s.load.closed_loop ? "closed" : "open");
  put("load.response_timeout_ms", u(s.load.response_timeout_ms));
  put("load.amount_min", u(s.load.amount_min));
  put("load.amount_max", u(s.load.amount_max));
  put("load.scarce_funding", b(s.load.scarce_funding));
  for (std::size_t i = 0; i < s.faults.size(); ++i) {
    const auto& f = s.faults[i];
    const std::string k = "fault." + std::to_string(i + 1) + ".";
    put(k + "kind", std::string(to_string(f.kind)));
    put(k + "start_ms", u(f.start.ticks));
    put(k + "end_ms", u(f.end.ticks));
    put(k + "mean_ms", u(f.mean_ms));
    put(k + "jitter_ms", u(f.jitter_ms));
    put(k + "probability", detail::fmt_double(f.probability));
    std::string nodes;
    for (std::size_t j = 0; j < f.nodes.size(); ++j) {
      if (j) nodes += ' ';
      nodes += std::to_string(f.nodes[j]);
    }
    put(k + "nodes", nodes);
  }
  return out;
}

/// Full effective configuration. Each line is prefixed with `prefix`, so the
/// same text can head a log (`"#! "`) or stand alone as a scenario file.
inline std::string echo_scenario(const ScenarioSpec& s, std::string_view prefix = "") {
  std::string out;
  for (const auto& [k, v] : scenario_entries(s)) {
    out += prefix;
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

/// Recovers a spec from `#! ` header lines of an artifact.
inline ScenarioSpec scenario_from_echo(std::string_view artifact) {
  std::string text;
  std::size_t start = 0;
  while (start < artifact.size()) {
    auto end = artifact.find('\n', start);
    if (end == std::string_view::npos) end = artifact.size();
    auto line = artifact.substr(start, end - start);
    if (line.rfind("#! ", 0) == 0) {
      text += line.substr(3);
      text += '\n';
    }
    start = end + 1;
  }
  return parse_scenario(text);
}

inline bool operator==(const ScenarioSpec& a, const ScenarioSpec& b) {
  return scenario_entries(a) == scenario_entries(b);
}

}  // namespace chaosbft
