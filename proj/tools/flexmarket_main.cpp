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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "flexmarket/bench.hpp"
#include "flexmarket/best_response.hpp"
#include "flexmarket/convex_solver.hpp"
#include "flexmarket/errors.hpp"
#include "flexmarket/mpec_mip.hpp"
#include "flexmarket/oracle.hpp"

namespace fm = flexmarket;
namespace fs = std::filesystem;

// Exit codes: 0 success, 1 I/O or usage error, 2 infeasible or degenerate
// input.
namespace {

constexpr int kOk = 0;
constexpr int kUsageError = 1;
constexpr int kInfeasible = 2;

int cmd_solve(const std::string& instance_path, bool no_cap, bool csv) {
  fm::MarketInstance inst;
  try {
    inst = fm::load_instance(instance_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }
  if (no_cap) inst.cap_enabled = false;

  fm::Allocation alloc;
  try {
    alloc = fm::solve(inst);
  } catch (const fm::SolverError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  }

  if (csv) {
    std::cout << "# objective=" << fm::format_double(alloc.objective)
              << " mu=" << fm::format_double(alloc.mu)
              << " cap_binding=" << (alloc.cap_binding ? "true" : "false")
              << " kkt_residual=" << fm::format_double(alloc.kkt_residual)
              << '\n';
    std::cout << "index,x,y\n";
    for (std::size_t i = 0; i < alloc.x.size(); ++i) {
      std::cout << i << ',' << fm::format_double(alloc.x[i]) << ','
                << fm::format_double(alloc.y[i]) << '\n';
    }
  } else {
    std::cout << fm::allocation_to_json(alloc).dump(2) << '\n';
  }
  return kOk;
}

int cmd_bench(const std::string& config_path, const std::string& out_dir,
              const std::string& solvers, int threads, bool no_timing) {
  fm::ScenarioConfig cfg;
  try {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config: " + config_path);
    nlohmann::json j;
    in >> j;
    cfg = fm::scenario_from_json(j);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }

  fm::BenchOptions options;
  options.threads = threads;
  options.timing = !no_timing;
  bool want_convex = false;
  std::stringstream ss(solvers);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name == "convex") {
      want_convex = true;
    } else if (name == "mip") {
      if (options.competitor != fm::Competitor::kNone) {
        std::cerr << "error: choose at most one of mip, oracle\n";
        return kUsageError;
      }
      options.competitor = fm::Competitor::kMip;
    } else if (name == "oracle") {
      if (options.competitor != fm::Competitor::kNone) {
        std::cerr << "error: choose at most one of mip, oracle\n";
        return kUsageError;
      }
      options.competitor = fm::Competitor::kOracle;
    } else {
      std::cerr << "error: unknown solver '" << name
                << "'\nusage: --solvers convex[,mip|,oracle]\n";
      return kUsageError;
    }
  }
  if (!want_convex) {
    std::cerr << "error: the convex solver is required\n"
              << "usage: --solvers convex[,mip|,oracle]\n";
    return kUsageError;
  }
  if (options.competitor == fm::Competitor::kMip ||
      options.competitor == fm::Competitor::kOracle) {
    for (int n : cfg.n_values) {
      if (n > fm::kBruteForceLimit) {
        std::cerr << "error: n = " << n
                  << " is beyond the exact competitor's enumeration limit ("
                  << fm::kBruteForceLimit << ")\n";
        return kUsageError;
      }
    }
  }

  try {
    fs::create_directories(out_dir);
    const fm::BenchmarkReport report = fm::run_benchmark(cfg, options);
    {
      std::ofstream out(fs::path(out_dir) / "trials.csv", std::ios::binary);
      fm::write_trials_csv(report, out);
    }
    {
      std::ofstream out(fs::path(out_dir) / "aggregate.csv",
                        std::ios::binary);
      fm::write_aggregate_csv(report, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }
  std::cout << "wrote " << (fs::path(out_dir) / "trials.csv").string()
            << " and " << (fs::path(out_dir) / "aggregate.csv").string()
            << '\n';
  return kOk;
}

int cmd_export_mip(const std::string& instance_path, double big_m,
                   bool big_m_set, const std::string& out_path) {
  fm::MarketInstance inst;
  try {
    inst = fm::load_instance(instance_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }
  if (inst.size() == 0) {
    std::cerr << "infeasible: empty instance, nothing to export\n";
    return kInfeasible;
  }
  const double m = big_m_set ? big_m : fm::choose_big_m(inst);
  try {
    fs::path out(out_path);
    if (fs::is_directory(out)) {
      out /= "instance_" + fs::path(instance_path).stem().string() + ".lp";
    }
    fm::export_lp_file(fm::build_big_m_mip(inst, m), out.string());
    std::cout << "wrote " << out.string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return kOk;
}

int cmd_verify(const std::string& instance_path, bool brute, int grid_steps,
               double tol) {
  fm::MarketInstance inst;
  try {
    inst = fm::load_instance(instance_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }

  nlohmann::ordered_json report;
  bool pass = true;
  fm::Allocation alloc;
  try {
    alloc = fm::solve(inst);
  } catch (const fm::SolverError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  }
  report["allocation"] = fm::allocation_to_json(alloc);

  const fm::KktReport kkt = fm::verify_kkt(alloc, inst, tol);
  report["kkt"] = {{"stationarity", kkt.stationarity},
                   {"primal", kkt.primal},
                   {"dual", kkt.dual},
                   {"complementarity", kkt.complementarity},
                   {"max_residual", kkt.max_residual},
                   {"pass", kkt.pass(tol)}};
  pass = pass && kkt.pass(tol);

  bool fixed_point = true;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    fixed_point = fixed_point &&
                  fm::best_response(alloc.x[i], inst.prosumers[i]) ==
                      alloc.y[i];
  }
  report["best_response_fixed_point"] = fixed_point;
  pass = pass && fixed_point;

  const fm::KktResiduals mpec =
      fm::evaluate_kkt(fm::build_kkt_system(inst),
                       fm::extend_with_duals(alloc, inst));
  report["mpec_residual"] = mpec.max_residual;
  pass = pass && mpec.max_residual <= tol;

  if (brute) {
    try {
      const fm::OracleCandidate cand = fm::brute_force_optimum(inst);
      const bool agree = fm::nearly_equal(cand.objective, alloc.objective);
      report["brute_force"] = {{"objective", cand.objective},
                               {"agrees", agree}};
      pass = pass && agree;
    } catch (const fm::SizeLimitError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kUsageError;
    }
  }
  if (grid_steps > 0) {
    try {
      const fm::OracleCandidate cand =
          fm::grid_search_bilevel(inst, grid_steps);
      report["grid_search"] = {
          {"objective", cand.objective},
          {"upper_bounds_optimum", cand.objective >= alloc.objective -
                                       1e-9}};
      pass = pass && cand.objective >= alloc.objective - 1e-9;
    } catch (const fm::SizeLimitError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kUsageError;
    }
  }

  report["pass"] = pass;
  std::cout << report.dump(2) << '\n';
  return pass ? kOk : kInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "flexmarket: exact personalized-price flexibility market solver\n"
      "exit codes: 0 success, 1 I/O or usage error, 2 infeasible or "
      "degenerate input"};
  app.require_subcommand(1);

  std::string instance_path, config_path, out_path, solvers = "convex";
  bool no_cap = false, csv = false, no_timing = false, brute = false;
  double big_m = 0.0, tol = fm::kKktTol;
  int threads = 1, grid_steps = 0;

  CLI::App* solve = app.add_subcommand("solve", "solve one instance");
  solve->add_option("--instance", instance_path, "instance JSON file")
      ->required();
  solve->add_flag("--no-cap", no_cap, "drop the sum(y) <= f constraint");
  CLI::Option* json_flag = solve->add_flag("--json", "JSON output (default)");
  solve->add_flag("--csv", csv, "CSV output")->excludes(json_flag);

  CLI::App* bench =
      app.add_subcommand("bench", "run a Monte Carlo benchmark sweep");
  bench->add_option("--config", config_path, "scenario config JSON")
      ->required();
  bench->add_option("--out", out_path, "output directory")->required();
  bench->add_option("--solvers", solvers,
                    "comma list: convex[,mip|,oracle]");
  bench->add_option("--threads", threads, "trial-level parallelism");
  bench->add_flag("--no-timing", no_timing,
                  "pin runtime columns to zero for byte-stable output");

  CLI::App* exp = app.add_subcommand("export-mip",
                                     "write the big-M MIP as an LP file");
  exp->add_option("--instance", instance_path, "instance JSON file")
      ->required();
  CLI::Option* big_m_opt =
      exp->add_option("--big-m", big_m, "override the heuristic M");
  exp->add_option("--out", out_path, "output file or directory")->required();

  CLI::App* verify = app.add_subcommand(
      "verify", "solve and check optimality certificates");
  verify->add_option("--instance", instance_path, "instance JSON file")
      ->required();
  verify->add_flag("--brute-force", brute,
                   "cross-check against the 3^n enumeration oracle");
  verify->add_option("--grid-steps", grid_steps,
                     "also run the price-grid oracle with this many steps");
  verify->add_option("--tol", tol, "residual tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  if (solve->parsed()) return cmd_solve(instance_path, no_cap, csv);
  if (bench->parsed()) {
    return cmd_bench(config_path, out_path, solvers, threads, no_timing);
  }
  if (exp->parsed()) {
    return cmd_export_mip(instance_path, big_m, big_m_opt->count() > 0,
                          out_path);
  }
  if (verify->parsed()) {
    return cmd_verify(instance_path, brute, grid_steps, tol);
  }
  return kUsageError;
}
