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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chaosbft/oracle/verify.hpp"
#include "chaosbft/scenario/chaos_suite.hpp"
#include "chaosbft/scenario/compare.hpp"
#include "chaosbft/scenario/simulation.hpp"
#include "chaosbft/scenario/spec.hpp"

namespace fs = std::filesystem;
using namespace chaosbft;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitViolation = 3;

std::string default_out() {
  if (const char* env = std::getenv("CHAOSBFT_OUT"); env != nullptr && *env != '\0') return env;
  return "out";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioSpec load(const std::string& file, std::optional<std::uint64_t> seed) {
  ScenarioSpec s = load_scenario_file(file);
  if (seed) s.seed = *seed;
  return s;
}

void print_summary(const SimulationResult& r, const fs::path& dir) {
  const auto& rep = r.report;
  std::cout << "protocol " << to_string(r.spec.protocol) << " seed " << r.spec.seed << " horizon_ms "
            << r.spec.horizon_ms << '\n';
  std::cout << "tp " << rep.tp.tps() << " tx/s over " << rep.tp.runtime_ms << " ms\n";
  if (rep.latency) {
    std::cout << "latency avg " << rep.latency->mean_ms() << " ms, median " << rep.latency->median_ms << " ms\n";
  } else {
    std::cout << "latency Null (no commits)\n";
  }
  if (rep.sr) std::cout << "success rate " << rep.sr->value() << " (" << rep.sr->committed << "/" << rep.sr->decided << ")\n";
  std::cout << "blocks created " << rep.blocks_created << ", committed " << rep.blocks_committed << '\n';
  for (const auto& v : r.violations) std::cout << "violation: " << v << '\n';
  if (!r.safety_enforced && !r.violations.empty()) {
    std::cout << "(corruption exceeds the protocol's fault model; violations reported, not enforced)\n";
  }
  std::cout << "artifacts in " << dir.string() << '\n';
}

int cmd_run(const std::string& file, std::optional<std::uint64_t> seed, const std::string& out) {
  const auto spec = load(file, seed);
  const auto result = run_scenario(spec);
  write_artifacts(result, out);
  print_summary(result, out);
  require_safety(result);
  return kExitOk;
}

int cmd_chaos_suite(const std::string& file, std::optional<std::uint64_t> seed, Millis phase_ms,
                    const std::string& out) {
  const auto base = load(file, seed);
  const auto suite = run_chaos_suite(base, phase_ms);
  const fs::path dir(out);
  write_artifacts(suite.run, dir);
  write_text(dir / "suite_report.json", chaos_suite_json(suite).dump(2) + "\n");
  write_text(dir / "chaos_schedule.txt", chaos_schedule_text(suite.plan));
  write_text(dir / "chaos_table.md", chaos_summary_table(suite));
  write_text(dir / "chaos_full.csv", chaos_full_table(suite));
  std::cout << chaos_schedule_text(suite.plan) << '\n' << chaos_summary_table(suite) << '\n' << chaos_full_table(suite);
  print_summary(suite.run, dir);
  require_safety(suite.run);
  return kExitOk;
}

int cmd_compare(const std::vector<std::string>& files, const std::string& json_out) {
  std::vector<nlohmann::json> reports;
  for (const auto& f : files) reports.push_back(nlohmann::json::parse(read_file(f)));
  const auto c = compare_reports(reports);
  std::cout << comparison_text(c);
  if (!json_out.empty()) write_text(json_out, comparison_json(c).dump(2) + "\n");
  return kExitOk;
}

int cmd_verify(const std::string& log_file, const std::vector<std::string>& chain_files, std::string report_file) {
  std::vector<oracle::DumpedChain> chains;
  for (const auto& f : chain_files) chains.push_back(oracle::parse_chain_dump(read_file(f)));
  const auto r = oracle::recompute(read_file(log_file), chains);
  std::cout << oracle::to_json(r).dump(2) << '\n';
  if (report_file.empty()) {
    const auto guess = fs::path(log_file).parent_path() / "report.json";
    if (fs::exists(guess)) report_file = guess.string();
  }
  int rc = kExitOk;
  if (!report_file.empty()) {
    const auto report = nlohmann::json::parse(read_file(report_file));
    const auto diffs = oracle::compare_report(r, report);
    for (const auto& d : diffs) std::cout << "mismatch: " << d << '\n';
    std::cout << (diffs.empty() ? "report reproduced exactly\n" : "report NOT reproduced\n");
    if (!diffs.empty()) rc = kExitViolation;
    const bool enforced = report.value("safety_enforced", true);
    if (enforced && !r.conflicts.empty()) rc = kExitViolation;
  } else if (!r.conflicts.empty()) {
    rc = kExitViolation;
  }
  for (const auto& c : r.conflicts) std::cout << "conflict: " << c << '\n';
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic chaos-testing simulator for permissioned consensus engines"};
  app.require_subcommand(1);

  std::string file;
  std::optional<std::uint64_t> seed;
  std::string out = default_out();

  auto* run = app.add_subcommand("run", "Run one scenario file");
  run->add_option("scenario", file, "Scenario file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", out, "Output directory (default $CHAOSBFT_OUT or ./out)");

  std::string suite_file;
  Millis phase_ms = kDefaultPhaseMs;
  auto* suite = app.add_subcommand("chaos-suite", "Run the eight-phase chaos sequence over a base scenario");
  suite->add_option("base", suite_file, "Base scenario file with one constant load stage")->required();
  suite->add_option("--seed", seed, "Override the scenario seed");
  suite->add_option("--phase-ms", phase_ms, "Length of each phase and each recovery gap");
  suite->add_option("--out", out, "Output directory (default $CHAOSBFT_OUT or ./out)");

  std::vector<std::string> reports;
  std::string compare_json;
  auto* compare = app.add_subcommand("compare", "Compare reports over identical load and fault schedules");
  compare->add_option("reports", reports, "report.json or suite_report.json files")->required();
  compare->add_option("--json", compare_json, "Also write the comparison as JSON");

  std::string log_file;
  std::vector<std::string> chain_files;
  std::string report_file;
  auto* verify = app.add_subcommand("verify", "Recompute metrics from an event log and chain dumps");
  verify->add_option("event-log", log_file, "events.log")->required();
  verify->add_option("chain-dumps", chain_files, "chain_<i>.csv files")->required();
  verify->add_option("--report", report_file, "report.json to check (default: next to the event log)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(file, seed, out);
    if (*suite) return cmd_chaos_suite(suite_file, seed, phase_ms, out);
    if (*compare) return cmd_compare(reports, compare_json);
    if (*verify) return cmd_verify(log_file, chain_files, report_file);
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violated: " << e.what() << '\n';
    return kExitViolation;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "invalid scenario: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ProfileInfeasible& e) {
    std::cerr << "invalid load profile: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IncomparableScenarios& e) {
    std::cerr << "incomparable: " << e.what() << '\n';
    return kExitConfig;
  } catch (const oracle::OracleInputError& e) {
    std::cerr << "bad oracle input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
