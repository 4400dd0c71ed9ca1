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
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "chaosbft/engine/factory.hpp"
#include "chaosbft/metrics/metrics.hpp"
#include "chaosbft/net/chaos_net.hpp"
#include "chaosbft/scenario/spec.hpp"
#include "chaosbft/sim/scheduler.hpp"
#include "chaosbft/workload/workload.hpp"

namespace chaosbft {

class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace ev {

struct Deliver {
  Message message;
};
struct Timer {
  NodeId node = 0;
  std::string label;
  std::uint64_t gen = 0;
};
struct User {
  UserAction action;
};
struct Fault {
  std::size_t index = 0;
  bool starts = true;
  std::string description;
};
struct Tick {
  std::uint64_t window = 0;
};

}  // namespace ev

using SimPayload = std::variant<ev::Deliver, ev::Timer, ev::User, ev::Fault, ev::Tick>;

struct DescribeSimEvent {
  EventNote operator()(const SimPayload& p) const {
    return std::visit(
        [](const auto& e) -> EventNote {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, ev::Deliver>) {
            const auto& m = e.message;
            std::string d = "id=" + std::to_string(m.id) + ";src=" + std::to_string(m.src) +
                            ";type=" + std::string(payload_name(m.payload));
            if (m.corrupted) d += ";corrupted=1";
            return {m.dst, d};
          } else if constexpr (std::is_same_v<T, ev::Timer>) {
            return {e.node, "label=" + e.label + ";gen=" + std::to_string(e.gen)};
          } else if constexpr (std::is_same_v<T, ev::User>) {
            return {std::nullopt, "action=" + std::string(to_string(e.action.kind)) +
                                      ";user=" + std::to_string(e.action.user)};
          } else if constexpr (std::is_same_v<T, ev::Fault>) {
            return {std::nullopt, "index=" + std::to_string(e.index + 1) +
                                      ";phase=" + (e.starts ? "start" : "end") + ";" + e.description};
          } else {
            return {std::nullopt, "window=" + std::to_string(e.window)};
          }
        },
        p);
  }
};

/// Validators outside every corrupt set.
inline std::vector<NodeId> honest_nodes(const ScenarioSpec& s) {
  std::set<NodeId> corrupt;
  for (const auto& f : s.faults) {
    if (f.kind == FaultKind::Corrupt) corrupt.insert(f.nodes.begin(), f.nodes.end());
  }
  std::vector<NodeId> out;
  for (NodeId n = 0; n < s.validators; ++n) {
    if (corrupt.count(n) == 0) out.push_back(n);
  }
  return out;
}

/// Whether the protocol's fault model covers the schedule, so that safety
/// can be demanded of the run.
inline bool safety_expected(const ScenarioSpec& s) {
  const std::size_t corrupt = s.validators - honest_nodes(s).size();
  if (s.protocol == Protocol::Raft) return corrupt == 0;
  return corrupt <= ValidatorSet(s.validators).f();
}

struct SimulationResult {
  ScenarioSpec spec;
  MetricsReport report;
  EventLog log;
  std::vector<std::vector<CommittedBlock>> chains;
  std::vector<NodeId> honest;
  std::vector<TxRecord> records;
  /// Raft only: which nodes became leader in each term.
  std::map<std::uint64_t, std::set<NodeId>> leaders;
  std::vector<std::string> violations;
  bool safety_enforced = true;
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_dropped = 0;
  std::uint64_t messages_corrupted = 0;
  std::uint64_t timer_deferrals = 0;

  bool ok() const { return !safety_enforced || violations.empty(); }
};

/// Height-by-height comparison of committed chains. Returns one message per
/// conflicting height.
inline std::vector<std::string> agreement_violations(const std::vector<std::vector<CommittedBlock>>& chains,
                                                     const std::vector<NodeId>& nodes) {
  std::vector<std::string> out;
  std::map<std::uint64_t, std::pair<Digest, NodeId>> seen;
  for (NodeId n : nodes) {
    for (const auto& cb : chains.at(n)) {
      auto [it, inserted] = seen.try_emplace(cb.block.height, cb.block.digest, n);
      if (!inserted && it->second.first != cb.block.digest) {
        out.push_back("commit conflict at height " + std::to_string(cb.block.height) + ": node " +
                      std::to_string(it->second.second) + " has " + hex_digest(it->second.first) + ", node " +
                      std::to_string(n) + " has " + hex_digest(cb.block.digest));
      }
    }
  }
  return out;
}

/// One run of a scenario: engines, network, users and metrics on a single
/// event loop.
class Simulation {
 public:
  explicit Simulation(ScenarioSpec spec)
      : spec_(std::move(spec)),
        rng_(spec_.seed),
        net_(spec_.net, spec_.validators, spec_.load.workers, rng_),
        workload_(spec_.load, spec_.validators, rng_),
        honest_(honest_nodes(spec_)),
        metrics_(honest_, spec_.window_ms) {
    validate_scenario(spec_);
    const AccountState genesis = workload_.genesis_state();
    for (NodeId i = 0; i < spec_.validators; ++i) {
      EngineContext ctx;
      ctx.self = i;
      ctx.validators = ValidatorSet(spec_.validators);
      ctx.params = spec_.engine;
      ctx.genesis = genesis;
      ctx.seed = spec_.seed;
      engines_.push_back(make_engine(spec_.protocol, std::move(ctx)));
    }
    timers_.resize(spec_.validators);
    honest_set_.insert(honest_.begin(), honest_.end());

    std::string meta = "protocol=" + std::string(to_string(spec_.protocol)) +
                       ";validators=" + std::to_string(spec_.validators) + ";seed=" + std::to_string(spec_.seed) +
                       ";horizon_ms=" + std::to_string(spec_.horizon_ms) +
                       ";measure_after_ms=" + std::to_string(spec_.measure_after_ms) + ";honest=";
    for (std::size_t i = 0; i < honest_.size(); ++i) meta += (i ? " " : "") + std::to_string(honest_[i]);
    sched_.log().append(LogRecord{0, 0, "Meta", std::nullopt, meta});

    for (const auto& t : net_.set_fault_schedule(spec_.faults)) {
      sched_.schedule(t.at, EventKind::FaultTransition,
                      ev::Fault{t.fault, t.starts, describe_fault(spec_.faults[t.fault])});
    }
    for (const auto& [at, action] : workload_.initial_schedule()) {
      if (at.ticks <= spec_.horizon_ms) sched_.schedule(at, EventKind::UserAction, ev::User{action});
    }
    for (std::uint64_t w = 1; w * spec_.window_ms <= spec_.horizon_ms; ++w) {
      sched_.schedule(SimTime{w * spec_.window_ms}, EventKind::MetricsTick, ev::Tick{w});
    }
  }

  const ScenarioSpec& spec() const { return spec_; }
  SimTime now() const { return sched_.now(); }
  const Engine& engine(NodeId i) const { return *engines_.at(i); }
  const ChaosNet& net() const { return net_; }
  const Workload& workload() const { return workload_; }
  const EventLog& log() const { return sched_.log(); }

  void run_until(SimTime t) {
    if (!started_) {
      started_ = true;
      for (NodeId i = 0; i < spec_.validators; ++i) act(i, engines_[i]->start(SimTime{}));
    }
    sched_.run_until(std::min(t, SimTime{spec_.horizon_ms}),
                     [this](const SimEvent<SimPayload>& e) { dispatch(e); });
  }

  SimulationResult finish() {
    run_until(SimTime{spec_.horizon_ms});
    SimulationResult r;
    r.spec = spec_;
    r.report = metrics_.finish(std::string(to_string(spec_.protocol)), spec_.seed, SimTime{spec_.horizon_ms},
                               SimTime{spec_.measure_after_ms}, spec_.faults);
    r.records = metrics_.records();
    r.honest = honest_;
    for (const auto& e : engines_) {
      const auto& blocks = e->ledger().blocks();
      r.chains.emplace_back(blocks.begin() + 1, blocks.end());
    }
    r.leaders = leaders_;
    r.safety_enforced = safety_expected(spec_);
    r.violations = agreement_violations(r.chains, honest_);
    for (const auto& [term, nodes] : leaders_) {
      if (nodes.size() > 1) r.violations.push_back("term " + std::to_string(term) + " has " +
                                                   std::to_string(nodes.size()) + " leaders");
    }
    if (r.report.phantom_commits > 0) {
      r.violations.push_back(std::to_string(r.report.phantom_commits) + " commits of unknown transactions");
    }
    r.messages_sent = sent_;
    r.messages_dropped = dropped_;
    r.messages_corrupted = corrupted_;
    r.timer_deferrals = deferrals_;
    r.log = sched_.log();
    return r;
  }

 private:
  struct PendingTimer {
    std::uint64_t gen = 0;
  };
  struct Route {
    NodeId client = 0;
    NodeId endpoint = 0;
    bool answered = false;
  };

  void note(std::string kind, std::optional<NodeId> node, std::string detail) {
    sched_.annotate(std::move(kind), node, std::move(detail));
  }

  void dispatch(const SimEvent<SimPayload>& e) {
    const SimTime now = sched_.now();
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, ev::Deliver>) {
            on_deliver(p.message, now);
          } else if constexpr (std::is_same_v<T, ev::Timer>) {
            on_timer(p, now);
          } else if constexpr (std::is_same_v<T, ev::User>) {
            apply(workload_.on_action(p.action, now), now);
          } else if constexpr (std::is_same_v<T, ev::Fault>) {
            // Window bookkeeping lives in the network; the record is the log line.
          } else {
            note("Load", std::nullopt,
                 "active_users=" + std::to_string(workload_.active_users()) +
                     ";in_flight=" + std::to_string(workload_.in_flight()));
          }
        },
        e.payload);
  }

  void on_deliver(const Message& m, SimTime now) {
    if (!net_.deliverable(m, now)) {
      ++dropped_;
      note("Drop", m.dst, "id=" + std::to_string(m.id) + ";reason=paused");
      return;
    }
    if (net_.is_client(m.dst)) {
      if (const auto* rc = std::get_if<msg::Receipt>(&m.payload)) {
        note("Receipt", m.dst,
             "tx=" + std::to_string(rc->tx_id) + ";committed=" + (rc->committed ? "1" : "0"));
        apply(workload_.on_receipt(rc->tx_id, now), now);
      }
      return;
    }
    act(m.dst, engines_[m.dst]->on_message(m, now));
  }

  void on_timer(const ev::Timer& t, SimTime now) {
    auto& slots = timers_[t.node];
    auto it = slots.find(t.label);
    if (it == slots.end() || it->second.gen != t.gen) return;
    if (net_.paused(t.node, now)) {
      const SimTime resume = resume_time(t.node, now);
      ++deferrals_;
      note("Deferred", t.node, "label=" + t.label + ";until=" + std::to_string(resume.ticks));
      if (resume.ticks <= spec_.horizon_ms) sched_.schedule(resume, EventKind::Timer, t);
      return;
    }
    slots.erase(it);
    act(t.node, engines_[t.node]->on_timer(t.label, now));
  }

  SimTime resume_time(NodeId n, SimTime t) const {
    while (net_.paused(n, t)) {
      SimTime next = t;
      for (const auto& f : net_.schedule()) {
        if (f.kind == FaultKind::Pause && f.contains(t) && f.affects(n)) next = max(next, f.end);
      }
      if (next == t) return SimTime{spec_.horizon_ms + 1};
      t = next;
    }
    return t;
  }

  void transmit(Message m, SimTime now) {
    ++sent_;
    const std::string type(payload_name(m.payload));
    auto r = net_.send(std::move(m), now);
    const auto& out = r.message;
    switch (r.status) {
      case SendStatus::PausedDrop:
        ++dropped_;
        note("Drop", out.src, "id=" + std::to_string(out.id) + ";dst=" + std::to_string(out.dst) + ";type=" + type +
                                  ";reason=paused");
        return;
      case SendStatus::LossDrop:
        ++dropped_;
        note("Drop", out.src, "id=" + std::to_string(out.id) + ";dst=" + std::to_string(out.dst) + ";type=" + type +
                                  ";reason=loss");
        return;
      case SendStatus::Scheduled:
        break;
    }
    if (out.corrupted) {
      ++corrupted_;
      note("Corrupt", out.src, "id=" + std::to_string(out.id) + ";dst=" + std::to_string(out.dst) + ";type=" + type +
                                   ";field=" + r.corrupt_field);
    }
    sched_.schedule(r.deliver_at, EventKind::MessageDelivery, ev::Deliver{std::move(r.message)});
  }

  void act(NodeId node, Actions actions) {
    const SimTime now = sched_.now();
    for (auto& a : actions) {
      std::visit(
          [&](auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, act::Send>) {
              if (x.dst == node) return;
              transmit(Message{0, node, x.dst, std::move(x.payload), false, now}, now);
            } else if constexpr (std::is_same_v<T, act::Broadcast>) {
              for (NodeId d = 0; d < spec_.validators; ++d) {
                if (d != node) transmit(Message{0, node, d, x.payload, false, now}, now);
              }
            } else if constexpr (std::is_same_v<T, act::CommitBlock>) {
              on_commit(node, x.block, now);
            } else if constexpr (std::is_same_v<T, act::SetTimer>) {
              auto& slot = timers_[node][x.label];
              slot.gen = ++timer_gen_;
              sched_.schedule(max(x.fire_at, now), EventKind::Timer, ev::Timer{node, x.label, slot.gen});
            } else if constexpr (std::is_same_v<T, act::CancelTimer>) {
              timers_[node].erase(x.label);
            } else if constexpr (std::is_same_v<T, act::ProposalCreated>) {
              note("ProposalCreated", node,
                   "height=" + std::to_string(x.block.height) + ";digest=" + hex_digest(x.block.digest) +
                       ";txs=" + std::to_string(x.block.txs.size()));
              metrics_.on_proposal(x.block, now);
            } else if constexpr (std::is_same_v<T, act::RejectTx>) {
              note("RejectTx", node, "tx=" + std::to_string(x.tx) + ";reason=" + x.reason);
              metrics_.on_reject(x.tx);
              auto it = routes_.find(x.tx);
              if (it != routes_.end() && !it->second.answered) {
                it->second.answered = true;
                transmit(Message{0, node, it->second.client, msg::Receipt{x.tx, false}, false, now}, now);
              }
            } else if constexpr (std::is_same_v<T, act::Trace>) {
              if (x.kind == "Leader") {
                if (auto term = detail_field(x.detail, "term")) leaders_[std::stoull(std::string(*term))].insert(node);
              }
              note(x.kind, node, x.detail);
            }
          },
          a);
    }
  }

  void on_commit(NodeId node, const Block& b, SimTime now) {
    std::string txs;
    for (const auto& tx : b.txs) {
      if (!txs.empty()) txs += ' ';
      txs += std::to_string(tx.id);
    }
    note("Commit", node,
         "height=" + std::to_string(b.height) + ";digest=" + hex_digest(b.digest) +
             ";proposer=" + std::to_string(b.proposer) + ";honest=" + (honest_set_.count(node) ? "1" : "0") +
             ";txs=" + txs);
    metrics_.on_commit(node, b, now);
    for (const auto& tx : b.txs) {
      auto it = routes_.find(tx.id);
      if (it == routes_.end() || it->second.endpoint != node || it->second.answered) continue;
      it->second.answered = true;
      transmit(Message{0, node, it->second.client, msg::Receipt{tx.id, true}, false, now}, now);
    }
  }

  void apply(WorkloadEffects fx, SimTime now) {
    for (auto& [at, action] : fx.schedule) {
      if (at.ticks <= spec_.horizon_ms) sched_.schedule(at, EventKind::UserAction, ev::User{action});
    }
    for (const auto& [tx, user] : fx.timed_out) {
      note("TxTimeout", std::nullopt, "tx=" + std::to_string(tx) + ";user=" + std::to_string(user));
      metrics_.on_client_timeout(tx);
    }
    for (auto& s : fx.submit) {
      note("TxCreated", s.endpoint,
           "tx=" + std::to_string(s.tx.id) + ";user=" + std::to_string(s.user) +
               ";client=" + std::to_string(s.client) + ";endpoint=" + std::to_string(s.endpoint));
      metrics_.on_tx_created(s.tx, s.endpoint);
      routes_[s.tx.id] = Route{s.client, s.endpoint, false};
      transmit(Message{0, s.client, s.endpoint, msg::ClientSubmit{s.tx, s.user}, false, now}, now);
    }
  }

  ScenarioSpec spec_;
  RngRegistry rng_;
  ChaosNet net_;
  Workload workload_;
  std::vector<NodeId> honest_;
  std::set<NodeId> honest_set_;
  MetricsCollector metrics_;
  std::vector<std::unique_ptr<Engine>> engines_;
  Scheduler<SimPayload, DescribeSimEvent> sched_;
  std::vector<std::map<std::string, PendingTimer>> timers_;
  std::uint64_t timer_gen_ = 0;
  std::map<TxId, Route> routes_;
  std::map<std::uint64_t, std::set<NodeId>> leaders_;
  bool started_ = false;
  std::uint64_t sent_ = 0;
  std::uint64_t dropped_ = 0;
  std::uint64_t corrupted_ = 0;
  std::uint64_t deferrals_ = 0;
};

/// Throws InvariantViolation when the run broke a property its fault model
/// promises.
inline void require_safety(const SimulationResult& r) {
  if (r.ok()) return;
  std::string what = r.violations.front();
  if (r.violations.size() > 1) what += " (+" + std::to_string(r.violations.size() - 1) + " more)";
  throw InvariantViolation(what);
}

inline SimulationResult run_scenario(const ScenarioSpec& spec) {
  Simulation sim(spec);
  return sim.finish();
}

// Artifact text. Every artifact carries the resolved scenario as `#! `
// header lines (JSON carries it as `scenario.*` keys).

inline std::string events_text(const SimulationResult& r) {
  std::ostringstream os;
  os << echo_scenario(r.spec, "#! ");
  r.log.write(os);
  return os.str();
}

inline std::string chain_csv(const SimulationResult& r, NodeId node) {
  std::ostringstream os;
  os << echo_scenario(r.spec, "#! ");
  os << "# node=" << node << '\n';
  os << "height,digest,proposer,tx_count,committed_at,parent,proposed_at,txs\n";
  for (const auto& cb : r.chains.at(node)) {
    const auto& b = cb.block;
    os << b.height << ',' << hex_digest(b.digest) << ',' << b.proposer << ',' << b.txs.size() << ','
       << cb.committed_at.ticks << ',' << hex_digest(b.parent) << ',' << b.proposed_at.ticks << ',';
    for (std::size_t i = 0; i < b.txs.size(); ++i) {
      if (i) os << ' ';
      os << b.txs[i].id;
    }
    os << '\n';
  }
  return os.str();
}

inline std::string metrics_csv(const SimulationResult& r) {
  std::ostringstream os;
  os << echo_scenario(r.spec, "#! ");
  write_windows_csv(os, r.report);
  return os.str();
}

inline nlohmann::ordered_json result_json(const SimulationResult& r) {
  auto j = report_json(r.report);
  j["safety_enforced"] = r.safety_enforced;
  j["safety_violations"] = r.violations.size();
  j["messages_sent"] = r.messages_sent;
  j["messages_dropped"] = r.messages_dropped;
  j["messages_corrupted"] = r.messages_corrupted;
  for (const auto& [k, v] : scenario_entries(r.spec)) j["scenario." + k] = v;
  return j;
}

inline std::string report_text(const SimulationResult& r) { return result_json(r).dump(2) + "\n"; }

struct ArtifactPaths {
  std::filesystem::path events;
  std::vector<std::filesystem::path> chains;
  std::filesystem::path metrics;
  std::filesystem::path report;
  std::filesystem::path echo;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

inline ArtifactPaths write_artifacts(const SimulationResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  ArtifactPaths p;
  p.events = dir / "events.log";
  write_text(p.events, events_text(r));
  for (NodeId i = 0; i < r.chains.size(); ++i) {
    p.chains.push_back(dir / ("chain_" + std::to_string(i) + ".csv"));
    write_text(p.chains.back(), chain_csv(r, i));
  }
  p.metrics = dir / "metrics.csv";
  write_text(p.metrics, metrics_csv(r));
  p.report = dir / "report.json";
  write_text(p.report, report_text(r));
  p.echo = dir / "scenario.echo";
  write_text(p.echo, echo_scenario(r.spec));
  return p;
}

}  // namespace chaosbft
