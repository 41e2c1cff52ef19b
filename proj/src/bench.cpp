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

#include "flexmarket/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <thread>

#include "flexmarket/errors.hpp"
#include "flexmarket/mpec_mip.hpp"
#include "flexmarket/oracle.hpp"

namespace flexmarket {

namespace {

constexpr int kResampleLimit = 100;

// The published device parameters. |b| values are stored verbatim for the
// direction the table was computed for (up for the heat pump, down for
// the micro-CHPs); the opposite direction comes from the price formulas
// with pi_e = 0.1707, pi_g = 0.0861.
constexpr DeviceTypeRow kDeviceTable[] = {
    {"hp1", DeviceKind::kHeatPump, 0.0, 1.1, 0.1707, -0.0861},
    {"mchp1", DeviceKind::kMicroChp, 8.0, 1.0, -8.0 * 0.1707, 0.6888},
    // The published 0.5088 differs from (4.7/0.8)*0.0861 = 0.5058; the
    // table value wins.
    {"mchp2", DeviceKind::kMicroChp, 4.7, 0.8, -(4.7 / 0.8) * 0.1707,
     0.5088},
};

// splitmix64-style mixing for per-trial seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

// mt19937_64 is bit-specified by the standard; converting draws manually
// keeps the stream identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform01() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  std::uint64_t integer(std::uint64_t bound) { return eng_() % bound; }

 private:
  std::mt19937_64 eng_;
};

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::span<const DeviceTypeRow> device_table() { return kDeviceTable; }

void ScenarioConfig::validate() const {
  if (n_values.empty()) {
    throw std::invalid_argument("ScenarioConfig: no prosumer counts");
  }
  for (int n : n_values) {
    if (n < 0) throw std::invalid_argument("ScenarioConfig: negative n");
  }
  if (trials <= 0) {
    throw std::invalid_argument("ScenarioConfig: trials must be positive");
  }
  if (!(a_range.lo > 0.0) || !(a_range.hi >= a_range.lo)) {
    throw std::invalid_argument("ScenarioConfig: bad a_range");
  }
  if (m_range && (!(m_range->lo >= 0.0) || !(m_range->hi >= m_range->lo))) {
    throw std::invalid_argument("ScenarioConfig: bad m_range");
  }
  if (!(f_policy.frac_lo >= 0.0) ||
      !(f_policy.frac_hi >= f_policy.frac_lo)) {
    throw std::invalid_argument("ScenarioConfig: bad f fractions");
  }
  if (!(device_mix >= 0.0) || !(device_mix <= 1.0)) {
    throw std::invalid_argument("ScenarioConfig: device_mix outside [0,1]");
  }
  if (!(dt_hours > 0.0)) {
    throw std::invalid_argument("ScenarioConfig: dt_hours must be positive");
  }
  prices.validate();
}

nlohmann::ordered_json scenario_to_json(const ScenarioConfig& cfg) {
  nlohmann::ordered_json j;
  j["n"] = cfg.n_values;
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["a_range"] = {cfg.a_range.lo, cfg.a_range.hi};
  if (cfg.m_range) {
    j["m_range"] = {cfg.m_range->lo, cfg.m_range->hi};
  } else {
    j["m_range"] = nullptr;
  }
  j["f_frac"] = {cfg.f_policy.frac_lo, cfg.f_policy.frac_hi};
  j["device_mix"] = cfg.device_mix;
  j["direction"] = to_string(cfg.direction);
  j["prices"] = {{"pi_e", cfg.prices.pi_e},
                 {"pi_g", cfg.prices.pi_g},
                 {"p", cfg.prices.p}};
  j["dt_hours"] = cfg.dt_hours;
  j["cap_enabled"] = cfg.cap_enabled;
  return j;
}

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  ScenarioConfig cfg;
  cfg.n_values.clear();
  const auto& jn = j.at("n");
  if (jn.is_array()) {
    for (const auto& v : jn) cfg.n_values.push_back(v.get<int>());
  } else {
    cfg.n_values.push_back(jn.get<int>());
  }
  cfg.trials = j.value("trials", 1000);
  cfg.seed = j.value("seed", std::uint64_t{1});
  if (j.contains("a_range")) {
    cfg.a_range = {j["a_range"][0].get<double>(),
                   j["a_range"][1].get<double>()};
  }
  if (j.contains("m_range") && !j["m_range"].is_null()) {
    cfg.m_range = Interval{j["m_range"][0].get<double>(),
                           j["m_range"][1].get<double>()};
  }
  if (j.contains("f_frac")) {
    cfg.f_policy = {j["f_frac"][0].get<double>(),
                    j["f_frac"][1].get<double>()};
  }
  cfg.device_mix = j.value("device_mix", 0.5);
  if (j.contains("direction")) {
    const std::string d = j["direction"].get<std::string>();
    if (d == "up") {
      cfg.direction = Direction::kUp;
    } else if (d == "down") {
      cfg.direction = Direction::kDown;
    } else {
      throw std::invalid_argument("direction must be 'up' or 'down'");
    }
  }
  if (j.contains("prices")) {
    cfg.prices.pi_e = j["prices"].value("pi_e", cfg.prices.pi_e);
    cfg.prices.pi_g = j["prices"].value("pi_g", cfg.prices.pi_g);
    cfg.prices.p = j["prices"].value("p", cfg.prices.p);
  }
  cfg.dt_hours = j.value("dt_hours", kDefaultDtHours);
  cfg.cap_enabled = j.value("cap_enabled", true);
  cfg.validate();
  return cfg;
}

MarketInstance generate_instance(const ScenarioConfig& cfg, int n, int trial,
                                 int* adjustments) {
  cfg.validate();
  Rng rng(mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(n)),
                   static_cast<std::uint64_t>(trial)));
  int adjusted = 0;

  // Exact device split, shuffled so positions are random.
  const int hp_count = static_cast<int>(std::lround(cfg.device_mix * n));
  std::vector<int> type(n);  // index into the device table
  for (int i = 0; i < n; ++i) type[i] = i < hp_count ? 0 : -1;
  for (int i = n - 1; i > 0; --i) {
    const int k = static_cast<int>(rng.integer(i + 1));
    std::swap(type[i], type[k]);
  }
  for (int i = 0; i < n; ++i) {
    if (type[i] == -1) type[i] = 1 + static_cast<int>(rng.integer(2));
  }

  MarketInstance inst;
  inst.p = cfg.prices.p;
  inst.cap_enabled = cfg.cap_enabled;
  inst.prosumers.resize(n);
  double total_m = 0.0;
  for (int i = 0; i < n; ++i) {
    const DeviceTypeRow& row = kDeviceTable[type[i]];
    Prosumer& pro = inst.prosumers[i];
    pro.b = cfg.direction == Direction::kUp ? row.b_up : row.b_down;
    const double m_hi =
        cfg.m_range ? cfg.m_range->hi : row.nominal_electric_kw * cfg.dt_hours;
    const double m_lo = cfg.m_range ? cfg.m_range->lo : 0.0;
    auto draw = [&] {
      pro.m = rng.uniform(m_lo, m_hi);
      pro.a = rng.uniform(cfg.a_range.lo, cfg.a_range.hi);
    };
    draw();
    if (pro.b < 0.0) {
      // Keep -b/a <= m so the prosumer's reduced box is nonempty:
      // resample, then clamp the curvature upward as a last resort.
      int tries = 0;
      while (pro.a * pro.m + pro.b < 0.0 && tries < kResampleLimit) {
        draw();
        ++tries;
      }
      if (tries > 0) ++adjusted;
      if (pro.a * pro.m + pro.b < 0.0) {
        if (pro.m <= 0.0) pro.m = 0.5 * std::max(m_hi, 1e-9);
        pro.a = (-pro.b / pro.m) * (1.0 + 1e-12);
      }
    }
    total_m += pro.m;
  }

  inst.f = rng.uniform(cfg.f_policy.frac_lo * total_m,
                       cfg.f_policy.frac_hi * total_m);
  if (cfg.cap_enabled) {
    const double free_flex = check_assumption1(inst).free_flex;
    int tries = 0;
    while (inst.f < free_flex && tries < kResampleLimit) {
      inst.f = rng.uniform(cfg.f_policy.frac_lo * total_m,
                           cfg.f_policy.frac_hi * total_m);
      ++tries;
    }
    if (tries > 0) ++adjusted;
    if (inst.f < free_flex) inst.f = free_flex;
  }

  if (adjustments) *adjustments = adjusted;
  return inst;
}

std::vector<MarketInstance> generate_scenarios(const ScenarioConfig& cfg,
                                               int n) {
  std::vector<MarketInstance> out;
  out.reserve(cfg.trials);
  for (int t = 0; t < cfg.trials; ++t) {
    out.push_back(generate_instance(cfg, n, t));
  }
  return out;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kMatch:
      return "match";
    case Verdict::kOtherWorse:
      return "other_worse";
    case Verdict::kOtherInfeasible:
      return "other_infeasible";
    case Verdict::kOtherError:
      return "other_error";
  }
  return "unknown";
}

Verdict compare_solutions(const Allocation& convex, double other_objective,
                          std::span<const double> other_y,
                          const MarketInstance& inst, double tol,
                          double feas_tol) {
  if (other_y.size() != inst.size() || !std::isfinite(other_objective)) {
    return Verdict::kOtherInfeasible;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < other_y.size(); ++i) {
    const double y = other_y[i];
    if (y < -feas_tol || y > inst.prosumers[i].m + feas_tol) {
      return Verdict::kOtherInfeasible;
    }
    total += y;
  }
  if (inst.cap_enabled && total > inst.f + feas_tol) {
    return Verdict::kOtherInfeasible;
  }
  if (nearly_equal(other_objective, convex.objective, tol)) {
    return Verdict::kMatch;
  }
  // A feasible competitor can never genuinely beat the global optimum;
  // report such a result as an error rather than hiding it.
  return other_objective > convex.objective ? Verdict::kOtherWorse
                                            : Verdict::kOtherError;
}

std::string hardware_description() {
  std::string model = "unknown cpu";
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find("model name");
    if (pos != std::string::npos) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        model = line.substr(colon + 1);
        while (!model.empty() && model.front() == ' ') model.erase(0, 1);
      }
      break;
    }
  }
  return model + " (" + std::to_string(std::thread::hardware_concurrency()) +
         " hw threads)";
}

namespace {

TrialRecord run_trial(const ScenarioConfig& cfg, const BenchOptions& options,
                      int n, int trial) {
  TrialRecord rec;
  rec.trial = trial;
  rec.n = n;
  rec.seed = mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(n)),
                      static_cast<std::uint64_t>(trial));
  const MarketInstance inst = generate_instance(cfg, n, trial,
                                                &rec.adjustments);

  Allocation alloc;
  bool convex_ok = false;
  try {
    const double t0 = now_seconds();
    alloc = solve(inst);
    const double t1 = now_seconds();
    rec.convex_runtime_s = options.timing ? t1 - t0 : 0.0;
    rec.convex_obj = alloc.objective;
    convex_ok = true;
  } catch (const SolverError&) {
    rec.convex_obj = std::numeric_limits<double>::quiet_NaN();
    rec.verdict = Verdict::kOtherError;
  }

  if (options.competitor == Competitor::kNone || !convex_ok) return rec;

  rec.other_ran = true;
  try {
    if (options.competitor == Competitor::kMip) {
      const MipModel model = build_big_m_mip(inst, choose_big_m(inst));
      BbLimits limits;
      limits.max_nodes = options.mip_max_nodes;
      const double t0 = now_seconds();
      const BbResult bb = solve_mip_bb(model, limits);
      const double t1 = now_seconds();
      rec.other_runtime_s = options.timing ? t1 - t0 : 0.0;
      if (!bb.has_incumbent) {
        rec.other_obj = std::numeric_limits<double>::quiet_NaN();
        rec.verdict = Verdict::kOtherInfeasible;
      } else {
        rec.other_obj = bb.objective;
        rec.verdict = compare_solutions(alloc, bb.objective, bb.y, inst);
      }
    } else {
      const double t0 = now_seconds();
      const OracleCandidate cand = brute_force_optimum(inst);
      const double t1 = now_seconds();
      rec.other_runtime_s = options.timing ? t1 - t0 : 0.0;
      rec.other_obj = cand.objective;
      rec.verdict = compare_solutions(alloc, cand.objective, cand.y, inst,
                                      kRelTol);
    }
  } catch (const std::exception&) {
    rec.other_obj = std::numeric_limits<double>::quiet_NaN();
    rec.verdict = Verdict::kOtherError;
  }
  return rec;
}

}  // namespace

BenchmarkReport run_benchmark(const ScenarioConfig& cfg,
                              const BenchOptions& options) {
  cfg.validate();
  BenchmarkReport report;
  report.config = cfg;
  report.options = options;
  report.hardware = hardware_description();

  int threads = std::max(1, options.threads);
  if (const char* env = std::getenv("FLEXMARKET_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) threads = std::min(threads, cap);
  }
  report.options.threads = threads;

  for (int n : cfg.n_values) {
    std::vector<TrialRecord> records(cfg.trials);
    auto worker = [&](int first) {
      for (int t = first; t < cfg.trials; t += threads) {
        records[t] = run_trial(cfg, options, n, t);
      }
    };
    if (threads == 1) {
      worker(0);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(threads);
      for (int w = 0; w < threads; ++w) pool.emplace_back(worker, w);
      for (auto& th : pool) th.join();
    }

    AggregateRow agg;
    agg.n = n;
    agg.trials = cfg.trials;
    for (const TrialRecord& rec : records) {
      agg.convex_avg_s += rec.convex_runtime_s;
      agg.convex_max_s = std::max(agg.convex_max_s, rec.convex_runtime_s);
      if (rec.other_ran) {
        agg.other_avg_s += rec.other_runtime_s;
        agg.other_max_s = std::max(agg.other_max_s, rec.other_runtime_s);
      }
      if ((rec.other_ran || options.competitor != Competitor::kNone) &&
          rec.verdict != Verdict::kMatch) {
        ++agg.mismatches;
      }
    }
    agg.convex_avg_s /= cfg.trials;
    if (options.competitor != Competitor::kNone) {
      agg.other_avg_s /= cfg.trials;
    }
    report.aggregates.push_back(agg);
    report.trials.insert(report.trials.end(), records.begin(),
                         records.end());
  }
  return report;
}

namespace {

void write_preamble(const BenchmarkReport& report, std::ostream& out) {
  nlohmann::ordered_json j;
  j["schema"] = "flexmarket-bench-v1";
  j["config"] = scenario_to_json(report.config);
  switch (report.options.competitor) {
    case Competitor::kNone:
      j["solvers"] = {"convex"};
      break;
    case Competitor::kMip:
      j["solvers"] = {"convex", "mip"};
      break;
    case Competitor::kOracle:
      j["solvers"] = {"convex", "oracle"};
      break;
  }
  // Thread count is deliberately omitted: output must be byte-identical
  // under any parallelism setting.
  j["timing"] = report.options.timing;
  j["hardware"] = report.hardware;
  // Total resample/clamp interventions across all trials (per-prosumer
  // consistency plus f redraws).
  int adjustments = 0;
  for (const TrialRecord& rec : report.trials) {
    adjustments += rec.adjustments;
  }
  j["adjustments"] = adjustments;
  out << "# " << j.dump() << '\n';
}

std::string csv_double(double v) {
  if (std::isnan(v)) return "nan";
  return format_double(v);
}

}  // namespace

void write_trials_csv(const BenchmarkReport& report, std::ostream& out) {
  write_preamble(report, out);
  out << "trial_id,n,seed,convex_runtime_s,mip_runtime_s,convex_obj,"
         "mip_obj,verdict\n";
  for (const TrialRecord& rec : report.trials) {
    out << rec.trial << ',' << rec.n << ',' << rec.seed << ','
        << csv_double(rec.convex_runtime_s) << ',';
    if (rec.other_ran) out << csv_double(rec.other_runtime_s);
    out << ',' << csv_double(rec.convex_obj) << ',';
    if (rec.other_ran) out << csv_double(rec.other_obj);
    out << ',';
    if (rec.other_ran || rec.verdict != Verdict::kMatch) {
      out << to_string(rec.verdict);
    }
    out << '\n';
  }
}

void write_aggregate_csv(const BenchmarkReport& report, std::ostream& out) {
  write_preamble(report, out);
  out << "n,trials,convex_avg_s,convex_max_s,mip_avg_s,mip_max_s,"
         "mip_infeasible_or_worse\n";
  const bool other = report.options.competitor != Competitor::kNone;
  for (const AggregateRow& agg : report.aggregates) {
    out << agg.n << ',' << agg.trials << ','
        << csv_double(agg.convex_avg_s) << ','
        << csv_double(agg.convex_max_s) << ',';
    if (other) out << csv_double(agg.other_avg_s);
    out << ',';
    if (other) out << csv_double(agg.other_max_s);
    out << ',';
    if (other) out << agg.mismatches;
    out << '\n';
  }
}

}  // namespace flexmarket
