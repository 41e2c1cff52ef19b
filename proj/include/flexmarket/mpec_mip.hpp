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

#ifndef FLEXMARKET_MPEC_MIP_HPP_
#define FLEXMARKET_MPEC_MIP_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "flexmarket/convex_solver.hpp"
#include "flexmarket/market_model.hpp"

namespace flexmarket {

// The single-level KKT reformulation of the bilevel problem and its big-M
// mixed-integer counterpart, the benchmark competitor. Handles model
// building, LP-format export/import and a small exact branch-and-bound.

/// Data of the complementarity system obtained by replacing each
/// prosumer's problem with its KKT conditions:
///   x_i - a_i*y_i - b_i + l1_i - l2_i = 0,
///   0 <= y_i        perp l1_i >= 0,
///   0 <= m_i - y_i  perp l2_i >= 0,
/// with x >= 0 and sum(y) <= f kept at the top level.
struct KktSystem {
  std::vector<double> a, b, m;
  double p = 0.0;
  double f = 0.0;
  bool cap_enabled = true;

  std::size_t size() const { return a.size(); }
};

struct KktPoint {
  std::vector<double> x, y, lambda1, lambda2;
};

struct KktResiduals {
  double stationarity = 0.0;
  double complementarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double max_residual = 0.0;
};

KktSystem build_kkt_system(const MarketInstance& inst);

KktResiduals evaluate_kkt(const KktSystem& sys, const KktPoint& point);

/// Duals consistent with a solved allocation: l1_i picks up the slack
/// below b_i at zero-flexibility coordinates, l2_i the excess above
/// a_i*m_i + b_i at saturated ones. The result satisfies the KKT system
/// to rounding error.
KktPoint extend_with_duals(const Allocation& alloc,
                           const MarketInstance& inst);

// ---------------------------------------------------------------------------
// Big-M MIP (complementarity via binaries z_i, w_i)

struct MipVariable {
  std::string name;
  double lb = 0.0;
  double ub = 0.0;  // +inf allowed
  bool is_binary = false;

  bool operator==(const MipVariable&) const = default;
};

enum class RowSense { kLe, kGe, kEq };

struct MipRow {
  std::string name;
  std::vector<std::pair<int, double>> terms;  // (variable index, coeff)
  RowSense sense = RowSense::kLe;
  double rhs = 0.0;

  bool operator==(const MipRow&) const = default;
};

/// Variable layout: y_1..y_n, l1_1..l1_n, l2_1..l2_n, z_1..z_n, w_1..w_n.
/// Objective: sum_i (a_i*y_i^2 + (b_i - p)*y_i + m_i*l2_i) + p*f.
struct MipModel {
  int n = 0;
  double big_m = 0.0;
  std::vector<MipVariable> vars;
  std::vector<MipRow> rows;
  std::vector<double> obj_linear;     // dense, per variable
  std::vector<double> obj_quad_diag;  // dense, coefficient of v^2
  double obj_constant = 0.0;

  bool operator==(const MipModel&) const = default;

  int y_index(int i) const { return i; }
  int l1_index(int i) const { return n + i; }
  int l2_index(int i) const { return 2 * n + i; }
  int z_index(int i) const { return 3 * n + i; }
  int w_index(int i) const { return 4 * n + i; }
};

/// Exactly the big-M constraint set: per prosumer the stationarity row
/// a_i*y_i - l1_i + l2_i >= -b_i, the four big-M rows, and the cap row
/// when enabled (5n + 1 structural rows; 0 <= y <= m and lambda >= 0 live
/// in the bounds). M adequacy is the caller's risk.
MipModel build_big_m_mip(const MarketInstance& inst, double big_m);

/// Heuristic M = 10 * max(max_i m_i, max_i(a_i*m_i + |b_i| + p), f).
/// Not guaranteed adequate in general; that gap is what makes the MIP
/// route fail on some instances.
double choose_big_m(const MarketInstance& inst);

/// LP text (quadratic objective in the [..]/2 bracket, Binaries section),
/// byte-stable for a fixed model. Header comments record M and n.
std::string export_lp(const MipModel& model);
void export_lp_file(const MipModel& model, const std::string& path);

/// Reads the dialect export_lp emits, reproducing the model
/// coefficient-for-coefficient. Throws std::runtime_error on malformed
/// input.
MipModel parse_lp(const std::string& text);
MipModel parse_lp_file(const std::string& path);

// ---------------------------------------------------------------------------
// Branch-and-bound over the binaries

struct BbLimits {
  std::int64_t max_nodes = 1'000'000;
  double time_limit_s = 120.0;
};

enum class BbStatus { kOptimal, kInfeasible, kNodeLimit, kTimeLimit };

struct BbResult {
  BbStatus status = BbStatus::kInfeasible;
  bool has_incumbent = false;
  double objective = 0.0;
  std::vector<double> y, lambda1, lambda2;
  std::vector<std::uint8_t> z, w;
  std::int64_t nodes = 0;
};

/// Exact depth-first branch-and-bound: z_i before w_i in index order,
/// children explored best bound first, node bounds from the
/// complementarity-relaxed separable QP. Deterministic; single-threaded.
BbResult solve_mip_bb(const MipModel& model, const BbLimits& limits = {});

const char* to_string(BbStatus s);

}  // namespace flexmarket

#endif  // FLEXMARKET_MPEC_MIP_HPP_
