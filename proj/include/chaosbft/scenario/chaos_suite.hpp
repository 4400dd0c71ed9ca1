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
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chaosbft/metrics/metrics.hpp"
#include "chaosbft/scenario/simulation.hpp"
#include "chaosbft/scenario/spec.hpp"

namespace chaosbft {

inline constexpr Millis kDefaultPhaseMs = 30000;
inline constexpr Millis kChaosDelayMs = 100;
inline constexpr Millis kChaosDelayJitterMs = 10;
inline constexpr double kChaosLoss = 0.15;
inline constexpr double kChaosCorruptProbability = 1.0;
inline constexpr std::size_t kChaosPhases = 8;

struct ChaosPhase {
  std::string label;
  /// Column of the seven-column summary table, if the phase has one.
  std::optional<std::string> column;
  SimTime start;
  SimTime end;
  /// End of the recovery gap that follows; equals `end` for the baseline.
  SimTime gap_end;
  std::vector<FaultSpec> faults;
};

struct ChaosPlan {
  ScenarioSpec spec;
  std::vector<ChaosPhase> phases;
  Millis warmup_ms = 0;
  Millis phase_ms = 0;
};

/// Half the validators, rounded up.
inline std::size_t half_up(std::size_t n) { return (n + 1) / 2; }

/// Lays the eight fault phases over a base scenario. The base must have a
/// single load stage; the stage's hold is stretched to cover the suite.
inline ChaosPlan plan_chaos_suite(ScenarioSpec base, Millis phase_ms = kDefaultPhaseMs) {
  if (base.load.stages.size() != 1) {
    throw ValidationError("load.stage", "chaos-suite needs a single constant load stage");
  }
  if (!base.faults.empty()) throw ValidationError("fault", "chaos-suite base must not define faults");
  if (phase_ms == 0) throw ValidationError("phase_ms", "must be positive");
  const std::size_t n = base.validators;
  ChaosPlan plan;
  plan.phase_ms = phase_ms;
  plan.warmup_ms = first_ramp(base.load);
  const Millis L = phase_ms;
  const Millis W = plan.warmup_ms;

  std::vector<NodeId> one{0};
  std::vector<NodeId> half;
  for (NodeId i = 0; i < half_up(n); ++i) half.push_back(i);
  std::vector<NodeId> paused;
  for (NodeId i = static_cast<NodeId>(n - half_up(n)); i < n; ++i) paused.push_back(i);

  plan.phases.push_back(ChaosPhase{"baseline", "baseline", SimTime{W}, SimTime{W + L}, SimTime{W + L}, {}});
  struct Def {
    const char* label;
    const char* column;
    bool delay, loss;
    const std::vector<NodeId>* corrupt;
    bool pause;
  };
  const Def defs[kChaosPhases] = {
      {"delay", "delay (100ms)", true, false, nullptr, false},
      {"loss", "loss (15%)", false, true, nullptr, false},
      {"delay+loss", "delay+loss", true, true, nullptr, false},
      {"corrupt-1", nullptr, false, false, &one, false},
      {"corrupt-half", "corrupted (50%)", false, false, &half, false},
      {"corrupt-1+delay+loss", nullptr, true, true, &one, false},
      {"corrupt-half+delay+loss", "corrupted+delay+loss", true, true, &half, false},
      {"pause-half", "paused (50%)", false, false, nullptr, true},
  };
  for (std::size_t i = 0; i < kChaosPhases; ++i) {
    const SimTime s{W + L + 2 * i * L};
    const SimTime e = s + L;
    ChaosPhase ph;
    ph.label = defs[i].label;
    if (defs[i].column) ph.column = defs[i].column;
    ph.start = s;
    ph.end = e;
    ph.gap_end = e + L;
    if (defs[i].delay) ph.faults.push_back(delay_fault(s, e, kChaosDelayMs, kChaosDelayJitterMs));
    if (defs[i].loss) ph.faults.push_back(loss_fault(s, e, kChaosLoss));
    if (defs[i].corrupt) ph.faults.push_back(corrupt_fault(s, e, kChaosCorruptProbability, *defs[i].corrupt));
    if (defs[i].pause) ph.faults.push_back(pause_fault(s, e, paused));
    plan.phases.push_back(std::move(ph));
  }

  const Millis horizon = W + L + 2 * kChaosPhases * L;
  base.horizon_ms = horizon;
  base.measure_after_ms = W;
  base.load.stages[0].hold_ms = horizon - W;
  for (const auto& ph : plan.phases) base.faults.insert(base.faults.end(), ph.faults.begin(), ph.faults.end());
  validate_scenario(base);
  plan.spec = std::move(base);
  return plan;
}

/// The schedule section: one row per phase, fault parameters spelled out.
inline std::string chaos_schedule_text(const ChaosPlan& plan) {
  std::ostringstream os;
  os << "# chaos schedule\n";
  os << "# validators=" << plan.spec.validators << " warmup_ms=" << plan.warmup_ms << " phase_ms=" << plan.phase_ms
     << " horizon_ms=" << plan.spec.horizon_ms << '\n';
  os << "phase,label,start_ms,end_ms,gap_end_ms,faults\n";
  for (std::size_t i = 0; i < plan.phases.size(); ++i) {
    const auto& ph = plan.phases[i];
    os << i << ',' << ph.label << ',' << ph.start.ticks << ',' << ph.end.ticks << ',' << ph.gap_end.ticks << ',';
    if (ph.faults.empty()) os << "none";
    for (std::size_t j = 0; j < ph.faults.size(); ++j) {
      if (j) os << " | ";
      os << describe_fault(ph.faults[j]);
    }
    os << '\n';
  }
  return os.str();
}

struct PhaseResult {
  ChaosPhase phase;
  IntervalStats during;
  IntervalStats recovery;
};

struct ChaosSuiteResult {
  ChaosPlan plan;
  SimulationResult run;
  std::vector<PhaseResult> phases;
};

inline ChaosSuiteResult run_chaos_suite(const ScenarioSpec& base, Millis phase_ms = kDefaultPhaseMs) {
  ChaosSuiteResult out;
  out.plan = plan_chaos_suite(base, phase_ms);
  out.run = run_scenario(out.plan.spec);
  for (const auto& ph : out.plan.phases) {
    PhaseResult pr;
    pr.phase = ph;
    pr.during = interval_stats(out.run.records, ph.start, ph.end);
    pr.recovery = interval_stats(out.run.records, ph.end, ph.gap_end);
    out.phases.push_back(std::move(pr));
  }
  return out;
}

namespace detail {

inline std::string cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

inline std::string cell(const std::optional<double>& v) { return v ? cell(*v) : std::string("Null"); }

}  // namespace detail

/// Seven columns: baseline, delay, loss, delay+loss, corrupted (50%),
/// corrupted+delay+loss, paused (50%). Rows: throughput and median latency.
inline std::string chaos_summary_table(const ChaosSuiteResult& r) {
  std::ostringstream os;
  os << "| " << to_string(r.plan.spec.protocol) << " |";
  for (const auto& p : r.phases) {
    if (p.phase.column) os << ' ' << *p.phase.column << " |";
  }
  os << "\n|---|";
  for (const auto& p : r.phases) {
    if (p.phase.column) os << "---|";
  }
  os << "\n| throughput (tx/s) |";
  for (const auto& p : r.phases) {
    if (p.phase.column) os << ' ' << detail::cell(p.during.throughput_tps) << " |";
  }
  os << "\n| median latency (ms) |";
  for (const auto& p : r.phases) {
    if (p.phase.column) os << ' ' << detail::cell(p.during.median_latency_ms) << " |";
  }
  os << '\n';
  return os.str();
}

/// Every phase with its recovery gap.
inline std::string chaos_full_table(const ChaosSuiteResult& r) {
  std::ostringstream os;
  os << "phase,label,start_ms,end_ms,throughput_tps,median_latency_ms,recovery_throughput_tps,"
        "recovery_median_latency_ms\n";
  for (std::size_t i = 0; i < r.phases.size(); ++i) {
    const auto& p = r.phases[i];
    os << i << ',' << p.phase.label << ',' << p.phase.start.ticks << ',' << p.phase.end.ticks << ','
       << detail::cell(p.during.throughput_tps) << ',' << detail::cell(p.during.median_latency_ms) << ',';
    if (p.phase.gap_end > p.phase.end) {
      os << detail::cell(p.recovery.throughput_tps) << ',' << detail::cell(p.recovery.median_latency_ms);
    } else {
      os << "-,-";
    }
    os << '\n';
  }
  return os.str();
}

inline nlohmann::ordered_json chaos_suite_json(const ChaosSuiteResult& r) {
  auto j = result_json(r.run);
  j["suite.phase_ms"] = r.plan.phase_ms;
  j["suite.warmup_ms"] = r.plan.warmup_ms;
  for (std::size_t i = 0; i < r.phases.size(); ++i) {
    const auto& p = r.phases[i];
    const std::string k = "suite.phase." + std::to_string(i) + ".";
    j[k + "label"] = p.phase.label;
    j[k + "start_ms"] = p.phase.start.ticks;
    j[k + "end_ms"] = p.phase.end.ticks;
    j[k + "throughput_tps"] = p.during.throughput_tps;
    j[k + "median_latency_ms"] =
        p.during.median_latency_ms ? nlohmann::ordered_json(*p.during.median_latency_ms) : nlohmann::ordered_json();
    j[k + "recovery_throughput_tps"] = p.recovery.throughput_tps;
  }
  return j;
}

}  // namespace chaosbft
