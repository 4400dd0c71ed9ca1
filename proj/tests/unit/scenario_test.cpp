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


#include <set>
#include <string>

#include <gtest/gtest.h>

#include "chaosbft/scenario/chaos_suite.hpp"
#include "chaosbft/scenario/compare.hpp"
#include "chaosbft/scenario/simulation.hpp"

namespace chaosbft {
namespace {

const std::string kSmall =
    "load.stage.1.users = 20\n"
    "load.stage.1.spawn_rate = 10\n"
    "load.stage.1.hold_ms = 10000\n";

ScenarioSpec small(const std::string& protocol, const std::string& extra = "") {
  return parse_scenario("protocol = " + protocol + "\n" + kSmall + extra);
}

TEST(Parse, MinimalFileTakesDefaults) {
  const auto s = parse_scenario("protocol=pbft");
  EXPECT_EQ(s.protocol, Protocol::Pbft);
  EXPECT_EQ(s.validators, 6u);
  EXPECT_EQ(s.seed, 1u);
  EXPECT_EQ(s.engine.block_size, 10u);
  EXPECT_EQ(s.engine.pbft_view_timeout_ms, 2000u);
  EXPECT_EQ(s.net.base_latency_ms, 5u);
  ASSERT_EQ(s.load.stages.size(), 1u);
  EXPECT_EQ(s.load.stages[0].target_users, 250u);
  EXPECT_EQ(s.load.workers, 3u);
  EXPECT_TRUE(s.faults.empty());
  EXPECT_EQ(s.horizon_ms, profile_end(s.load));
  EXPECT_EQ(s.measure_after_ms, first_ramp(s.load));
}

TEST(Parse, ErrorsNameTheKey) {
  try {
    parse_scenario("protocol = pbft\n\nvalidatorz = 6\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("validatorz"), std::string::npos);
  }
  EXPECT_THROW(parse_scenario("protocol = paxos"), ParseError);
  EXPECT_THROW(parse_scenario("validators = six"), ParseError);
  EXPECT_THROW(parse_scenario("seed = 1\nseed = 2"), ParseError);
  try {
    parse_scenario("protocol = pbft\nvalidators = 3");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "validators");
  }
}

TEST(Parse, FaultBeyondHorizonIsRejected) {
  try {
    load_scenario_file(CHAOSBFT_SCENARIO_DIR "/bad_fault.scn");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "fault.1.end_ms");
  }
  EXPECT_THROW(small("raft", "fault.1.kind = pause\nfault.1.start_ms = 0\nfault.1.end_ms = 10\nfault.1.nodes = 6\n"),
               ValidationError);
}

TEST(Parse, BaselineFile) {
  const auto s = load_scenario_file(CHAOSBFT_SCENARIO_DIR "/baseline_6x10.scn");
  EXPECT_EQ(s.validators, 6u);
  EXPECT_EQ(s.engine.block_size, 10u);
  EXPECT_EQ(s.load.stages[0].target_users, 250u);
  EXPECT_EQ(s.load.stages[0].spawn_rate, 3.0);
  EXPECT_EQ(s.load.workers, 3u);
}

TEST(Parse, EchoRoundTrips) {
  auto s = small("clique",
                 "seed = 9\nfault.1.kind = loss\nfault.1.start_ms = 100\nfault.1.end_ms = 200\n"
                 "fault.1.probability = 0.15\nfault.2.kind = corrupt\nfault.2.start_ms = 0\n"
                 "fault.2.end_ms = 500\nfault.2.nodes = 0 2 4\n");
  EXPECT_EQ(parse_scenario(echo_scenario(s)), s);
  EXPECT_EQ(scenario_from_echo(echo_scenario(s, "#! ") + "0,0,Meta,-,\n"), s);
  EXPECT_EQ(s.faults[1].nodes, (std::vector<NodeId>{0, 2, 4}));
  EXPECT_EQ(s.faults[1].probability, 1.0);
  EXPECT_EQ(s.faults[0].jitter_ms, 0u);
}

TEST(Run, FaultFreePbftAgreesWithFullSuccessRate) {
  const auto r = run_scenario(small("pbft"));
  EXPECT_TRUE(r.ok());
  EXPECT_TRUE(r.violations.empty());
  ASSERT_TRUE(r.report.sr);
  EXPECT_EQ(r.report.sr->value(), 1.0);
  EXPECT_GT(r.report.tx_committed, 0u);
}

TEST(Run, SeedsChangeTheLogButNotTheOutcomeClass) {
  auto a = small("raft");
  auto b = a;
  b.seed = 2;
  const auto ra = run_scenario(a);
  const auto rb = run_scenario(b);
  const auto ra2 = run_scenario(a);
  EXPECT_NE(events_text(ra), events_text(rb));
  EXPECT_EQ(events_text(ra), events_text(ra2));
  EXPECT_EQ(report_text(ra), report_text(ra2));
  EXPECT_TRUE(ra.ok());
  EXPECT_TRUE(rb.ok());
}

TEST(Run, HalfPausedRaftCommitsNothingInsideTheWindow) {
  const auto spec = small("raft", "fault.1.kind = pause\nfault.1.start_ms = 4000\nfault.1.end_ms = 8000\n"
                                  "fault.1.nodes = 3 4 5\n");
  const auto r = run_scenario(spec);
  std::uint64_t inside = 0;
  std::uint64_t after = 0;
  for (const auto& rec : r.log.records()) {
    const bool paused_node = rec.node && *rec.node >= 3;
    if (rec.tick >= 4000 && rec.tick < 8000) {
      if (rec.kind == "Commit") ++inside;
      if (paused_node) {
        EXPECT_NE(rec.kind, "Commit");
        EXPECT_NE(rec.kind, "ProposalCreated");
        EXPECT_NE(rec.kind, "Trace");
      }
      if (rec.kind == "MessageDelivery" && rec.tick >= 4100) {
        const auto src = std::stoul(std::string(*detail_field(rec.detail, "src")));
        EXPECT_TRUE(src < 3 || src >= spec.validators) << rec.detail;
      }
    }
    if (rec.tick >= 8000 && rec.kind == "Commit") ++after;
  }
  EXPECT_EQ(inside, 0u);
  EXPECT_GT(after, 0u);
  EXPECT_TRUE(r.ok());
}

TEST(Run, CorruptionLowersSuccessRate) {
  const auto clean = run_scenario(small("pbft"));
  const auto dirty = run_scenario(
      small("pbft", "fault.1.kind = corrupt\nfault.1.start_ms = 2000\nfault.1.end_ms = 8000\nfault.1.nodes = 0\n"));
  ASSERT_TRUE(clean.report.sr && dirty.report.sr);
  EXPECT_LT(dirty.report.sr->value(), clean.report.sr->value());
  EXPECT_TRUE(dirty.ok());
}

TEST(Run, SafetyExpectationFollowsTheFaultModel) {
  EXPECT_TRUE(safety_expected(small("pbft", "fault.1.kind = corrupt\nfault.1.start_ms = 0\nfault.1.end_ms = 10\n"
                                            "fault.1.nodes = 0\n")));
  EXPECT_FALSE(safety_expected(small("pbft", "fault.1.kind = corrupt\nfault.1.start_ms = 0\nfault.1.end_ms = 10\n"
                                             "fault.1.nodes = 0 1 2\n")));
  EXPECT_FALSE(safety_expected(small("raft", "fault.1.kind = corrupt\nfault.1.start_ms = 0\nfault.1.end_ms = 10\n"
                                             "fault.1.nodes = 0\n")));
  EXPECT_TRUE(safety_expected(small("clique")));
}

TEST(ChaosSuite, PlanLayout) {
  const auto plan = plan_chaos_suite(small("clique"), 5000);
  ASSERT_EQ(plan.phases.size(), kChaosPhases + 1);
  EXPECT_TRUE(plan.phases[0].faults.empty());
  for (std::size_t i = 1; i < plan.phases.size(); ++i) {
    const auto& ph = plan.phases[i];
    EXPECT_EQ(ph.end.ticks - ph.start.ticks, 5000u);
    EXPECT_EQ(ph.gap_end.ticks - ph.end.ticks, 5000u);
    if (i + 1 < plan.phases.size()) {
      EXPECT_EQ(plan.phases[i + 1].start, ph.gap_end);
    }
  }
  EXPECT_EQ(plan.spec.horizon_ms, plan.phases.back().gap_end.ticks);
  const auto& half = plan.phases[5];
  EXPECT_EQ(half.label, "corrupt-half");
  EXPECT_EQ(half.faults.at(0).nodes.size(), 3u);
  EXPECT_EQ(plan.phases[4].faults.at(0).nodes.size(), 1u);
  EXPECT_EQ(plan.phases[8].faults.at(0).kind, FaultKind::Pause);
  EXPECT_EQ(plan.phases[1].faults.at(0).mean_ms, 100u);
  EXPECT_EQ(plan.phases[2].faults.at(0).probability, 0.15);
  EXPECT_THROW(plan_chaos_suite(parse_scenario("load.stage.1.users = 5\nload.stage.1.spawn_rate = 1\n"
                                               "load.stage.2.users = 10\nload.stage.2.spawn_rate = 1\n")),
               ValidationError);
}

TEST(Compare, NeedsMatchingScenarios) {
  auto a = small("pbft");
  auto b = small("clique");
  const auto ja = nlohmann::json(result_json(run_scenario(a)));
  const auto jb = nlohmann::json(result_json(run_scenario(b)));
  EXPECT_THROW(compare_reports({ja}), IncomparableScenarios);
  const auto c = compare_reports({ja, jb});
  EXPECT_EQ(c.runs.size(), 2u);
  EXPECT_EQ(c.ranking.count("tp"), 1u);
  auto longer = small("clique");
  longer.horizon_ms += 1000;
  const auto jl = nlohmann::json(result_json(run_scenario(longer)));
  EXPECT_THROW(compare_reports({ja, jl}), IncomparableScenarios);
}

}  // namespace
}  // namespace chaosbft
