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

#ifndef FLEXMARKET_BENCH_HPP_
#define FLEXMARKET_BENCH_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "flexmarket/convex_solver.hpp"
#include "flexmarket/market_model.hpp"

namespace flexmarket {

// Monte Carlo harness: random instances from the device tables, both
// solvers timed on each, verdicts aggregated into a runtime/optimality
// table.

/// One row of the device parameter tables. The |b| column is stored
/// verbatim for the tabulated direction; the untabulated direction falls
/// back to the price-book formula.
struct DeviceTypeRow {
  const char* name;
  DeviceKind kind;
  double nominal_input_kw;     // fuel side, micro-CHP only
  double nominal_electric_kw;  // P_max
  double b_up;                 // EUR/kWh, aggregator up-regulation
  double b_down;               // EUR/kWh, aggregator down-regulation
};

/// HP type 1 and micro-CHP types 1 and 2 with the published |b| values.
/// Note the micro-CHP type 2 entry keeps the published 0.5088 even though
/// the c*pi_g formula with the published prices gives 0.5058.
std::span<const DeviceTypeRow> device_table();

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// f is drawn uniformly from [frac_lo, frac_hi] * sum(m_i), which makes
/// the draw's scaling with n explicit.
struct FPolicy {
  double frac_lo = 0.25;
  double frac_hi = 1.0;
};

struct ScenarioConfig {
  std::vector<int> n_values{10};
  int trials = 1000;
  std::uint64_t seed = 1;
  Interval a_range{0.05, 2.0};
  std::optional<Interval> m_range;  // default: [0, P_max * dt] per device
  FPolicy f_policy;
  double device_mix = 0.5;  // fraction of prosumers with a heat pump
  Direction direction = Direction::kDown;
  PriceBook prices{0.1707, 0.0861, 0.6};
  double dt_hours = kDefaultDtHours;
  bool cap_enabled = true;

  void validate() const;
};

nlohmann::ordered_json scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig scenario_from_json(const nlohmann::json& j);

/// Deterministic instance for (cfg, n, trial): device mix split exactly,
/// a_i, m_i, f uniform over the configured ranges. Draws violating
/// per-prosumer consistency (-b/a <= m) or assumption 1 are resampled a
/// bounded number of times, then clamped; `adjustments`, when non-null,
/// receives the number of such interventions.
MarketInstance generate_instance(const ScenarioConfig& cfg, int n, int trial,
                                 int* adjustments = nullptr);

/// All trial instances for one n, in trial order.
std::vector<MarketInstance> generate_scenarios(const ScenarioConfig& cfg,
                                               int n);

/// kOtherError marks a competitor that threw, or one that reported an
/// impossibly better objective than the certified global optimum.
enum class Verdict { kMatch, kOtherWorse, kOtherInfeasible, kOtherError };

const char* to_string(Verdict v);

/// Compares a competitor's solution against the convex allocation: Match
/// when feasible and the objectives agree within tol (relative, absolute
/// floor), OtherWorse when feasible but costlier, OtherInfeasible when a
/// constraint is violated beyond feas_tol or no solution was produced.
Verdict compare_solutions(const Allocation& convex, double other_objective,
                          std::span<const double> other_y,
                          const MarketInstance& inst, double tol = 1e-6,
                          double feas_tol = 1e-7);

enum class Competitor { kNone, kMip, kOracle };

struct BenchOptions {
  bool run_convex = true;
  Competitor competitor = Competitor::kNone;
  int threads = 1;     // trial-level parallelism
  bool timing = true;  // false pins runtime columns to 0 for byte-stable CSV
  std::int64_t mip_max_nodes = 4'000'000;
};

struct TrialRecord {
  int trial = 0;
  int n = 0;
  std::uint64_t seed = 0;
  double convex_runtime_s = 0.0;
  double other_runtime_s = 0.0;
  double convex_obj = 0.0;
  double other_obj = 0.0;
  bool other_ran = false;
  Verdict verdict = Verdict::kMatch;
  int adjustments = 0;
};

/// One aggregate row per n, shaped like the published comparison table.
struct AggregateRow {
  int n = 0;
  int trials = 0;
  double convex_avg_s = 0.0;
  double convex_max_s = 0.0;
  double other_avg_s = 0.0;
  double other_max_s = 0.0;
  int mismatches = 0;  // competitor infeasible, worse, or errored
};

struct BenchmarkReport {
  ScenarioConfig config;
  BenchOptions options;
  std::string hardware;
  std::vector<TrialRecord> trials;
  std::vector<AggregateRow> aggregates;
};

/// Runs the sweep. Per-trial solver failures become verdicts, never
/// aborts. Trials of one n may run on `threads` workers; rows are keyed
/// by trial index so the output is identical for any thread count.
BenchmarkReport run_benchmark(const ScenarioConfig& cfg,
                              const BenchOptions& options);

/// CSV with a JSON preamble line; columns
/// trial_id,n,seed,convex_runtime_s,mip_runtime_s,convex_obj,mip_obj,verdict.
/// The mip_* columns carry whichever competitor ran and stay empty
/// otherwise.
void write_trials_csv(const BenchmarkReport& report, std::ostream& out);

/// Aggregate CSV mirroring the runtime/optimality comparison table.
void write_aggregate_csv(const BenchmarkReport& report, std::ostream& out);

std::string hardware_description();

}  // namespace flexmarket

#endif  // FLEXMARKET_BENCH_HPP_
