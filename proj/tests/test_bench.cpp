// Copyright 2026 The flexmarket Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "flexmarket/bench.hpp"
#include "flexmarket/convex_solver.hpp"
#include "flexmarket/errors.hpp"

using namespace flexmarket;

namespace {

std::string trials_csv(const BenchmarkReport& report) {
  std::ostringstream out;
  write_trials_csv(report, out);
  return out.str();
}

std::string aggregate_csv(const BenchmarkReport& report) {
  std::ostringstream out;
  write_aggregate_csv(report, out);
  return out.str();
}

}  // namespace

TEST_CASE("instance generation is deterministic in the seed") {
  ScenarioConfig cfg;
  cfg.seed = 42;
  const MarketInstance a = generate_instance(cfg, 2, 0);
  const MarketInstance b = generate_instance(cfg, 2, 0);
  CHECK(instance_to_json(a).dump() == instance_to_json(b).dump());

  const MarketInstance c = generate_instance(cfg, 2, 1);
  CHECK(instance_to_json(a).dump() != instance_to_json(c).dump());
}

TEST_CASE("device mix splits exactly") {
  ScenarioConfig cfg;
  cfg.seed = 7;
  cfg.direction = Direction::kDown;
  const MarketInstance inst = generate_instance(cfg, 10, 3);
  REQUIRE(inst.size() == 10);
  // Down-regulation: heat pumps have b < 0, micro-CHPs b > 0.
  int hp = 0;
  for (const Prosumer& pro : inst.prosumers) hp += pro.b < 0.0 ? 1 : 0;
  CHECK(hp == 5);
}

TEST_CASE("device table b values reach the instances") {
  ScenarioConfig cfg;
  cfg.seed = 9;
  cfg.device_mix = 0.0;  // micro-CHP only
  cfg.direction = Direction::kDown;
  std::set<double> seen;
  for (int t = 0; t < 20; ++t) {
    for (const Prosumer& pro : generate_instance(cfg, 6, t).prosumers) {
      seen.insert(pro.b);
    }
  }
  CHECK(seen.count(0.6888) == 1);
  CHECK(seen.count(0.5088) == 1);
  CHECK(seen.size() == 2);

  cfg.device_mix = 1.0;  // heat pumps only
  cfg.direction = Direction::kUp;
  const MarketInstance hp = generate_instance(cfg, 4, 0);
  for (const Prosumer& pro : hp.prosumers) CHECK(pro.b == 0.1707);
}

TEST_CASE("generated instances are always solvable") {
  for (Direction dir : {Direction::kDown, Direction::kUp}) {
    ScenarioConfig cfg;
    cfg.seed = 11;
    cfg.direction = dir;
    for (int t = 0; t < 60; ++t) {
      const MarketInstance inst = generate_instance(cfg, 1 + t % 12, t);
      CHECK(check_assumption1(inst).holds);
      CHECK_NOTHROW(solve(inst));
    }
  }
}

TEST_CASE("compare_solutions verdicts") {
  MarketInstance inst;
  inst.prosumers = {{1.0, 2.0, 6.0, {}}, {1.0, 2.0, 6.0, {}}};
  inst.p = 10.0;
  inst.f = 30.0;
  const Allocation alloc = solve(inst);

  const std::vector<double> y_opt{4.0, 4.0};
  CHECK(compare_solutions(alloc, 268.0, y_opt, inst) == Verdict::kMatch);
  const std::vector<double> y_up{6.0, 6.0};
  CHECK(compare_solutions(alloc, 276.0, y_up, inst) ==
        Verdict::kOtherWorse);

  MarketInstance tight = inst;
  tight.f = 8.0;
  const Allocation capped = solve(tight);
  CHECK(compare_solutions(capped, 268.0, y_up, tight) ==
        Verdict::kOtherInfeasible);  // sum(y) = 12 > f = 8
  const std::vector<double> y_bad{7.0, 0.0};
  CHECK(compare_solutions(alloc, 268.0, y_bad, inst) ==
        Verdict::kOtherInfeasible);  // above m
  CHECK(compare_solutions(alloc, 200.0, y_opt, inst) ==
        Verdict::kOtherError);  // "better" than the global optimum
}

TEST_CASE("a full sweep has one row per trial and one aggregate row") {
  ScenarioConfig cfg;
  cfg.n_values = {10};
  cfg.trials = 1000;
  cfg.seed = 17;
  BenchOptions options;
  options.timing = false;
  const BenchmarkReport report = run_benchmark(cfg, options);
  CHECK(report.trials.size() == 1000);
  CHECK(report.aggregates.size() == 1);

  const auto scenarios = generate_scenarios(cfg, 10);
  CHECK(scenarios.size() == 1000);
  CHECK(instance_to_json(scenarios[7]).dump() ==
        instance_to_json(generate_instance(cfg, 10, 7)).dump());
}

TEST_CASE("benchmark report shape and oracle certification") {
  ScenarioConfig cfg;
  cfg.n_values = {4};
  cfg.trials = 25;
  cfg.seed = 5;
  BenchOptions options;
  options.competitor = Competitor::kOracle;
  options.timing = false;

  const BenchmarkReport report = run_benchmark(cfg, options);
  CHECK(report.trials.size() == 25);
  REQUIRE(report.aggregates.size() == 1);
  CHECK(report.aggregates[0].trials == 25);
  CHECK(report.aggregates[0].mismatches == 0);
  for (const TrialRecord& rec : report.trials) {
    CHECK(rec.verdict == Verdict::kMatch);
  }

  const std::string csv = trials_csv(report);
  CHECK(csv.find("trial_id,n,seed,convex_runtime_s,mip_runtime_s,"
                 "convex_obj,mip_obj,verdict") != std::string::npos);
  CHECK(csv.find("# {\"schema\":\"flexmarket-bench-v1\"") == 0);
}

TEST_CASE("fixed seed gives byte-identical CSV across thread counts") {
  ScenarioConfig cfg;
  cfg.n_values = {3, 5};
  cfg.trials = 16;
  cfg.seed = 1234;
  BenchOptions options;
  options.competitor = Competitor::kMip;
  options.timing = false;

  options.threads = 1;
  const BenchmarkReport one = run_benchmark(cfg, options);
  options.threads = 2;
  const BenchmarkReport two = run_benchmark(cfg, options);
  options.threads = 1;
  const BenchmarkReport again = run_benchmark(cfg, options);

  CHECK(trials_csv(one) == trials_csv(two));
  CHECK(trials_csv(one) == trials_csv(again));
  CHECK(aggregate_csv(one) == aggregate_csv(two));
}

TEST_CASE("convex-only mode leaves competitor columns empty") {
  ScenarioConfig cfg;
  cfg.n_values = {3};
  cfg.trials = 4;
  cfg.seed = 3;
  BenchOptions options;
  options.timing = false;

  const std::string csv = trials_csv(run_benchmark(cfg, options));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // preamble
  std::getline(in, line);  // header
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    // trial,n,seed,convex_rt,<empty>,convex_obj,<empty>,<empty verdict>
    CHECK(line.find(",,") != std::string::npos);
    CHECK(line.back() == ',');
  }
  CHECK(rows == 4);
}

TEST_CASE("scenario config JSON round trip") {
  ScenarioConfig cfg;
  cfg.n_values = {10, 100};
  cfg.trials = 77;
  cfg.seed = 99;
  cfg.m_range = Interval{0.01, 0.2};
  cfg.direction = Direction::kUp;
  cfg.cap_enabled = false;

  const ScenarioConfig back = scenario_from_json(scenario_to_json(cfg));
  CHECK(back.n_values == cfg.n_values);
  CHECK(back.trials == cfg.trials);
  CHECK(back.seed == cfg.seed);
  REQUIRE(back.m_range.has_value());
  CHECK(back.m_range->hi == 0.2);
  CHECK(back.direction == Direction::kUp);
  CHECK_FALSE(back.cap_enabled);

  CHECK_THROWS(scenario_from_json(
      nlohmann::json::parse(R"({"n":5,"direction":"sideways"})")));
}
