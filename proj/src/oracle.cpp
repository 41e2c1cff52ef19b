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

#include "flexmarket/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "flexmarket/best_response.hpp"
#include "flexmarket/errors.hpp"

namespace flexmarket {

std::optional<OracleCandidate> solve_piece_restricted(
    const MarketInstance& inst, const PieceAssignment& pa) {
  const std::size_t n = inst.size();
  if (pa.size() != n) {
    throw std::invalid_argument("piece assignment length mismatch");
  }

  OracleCandidate cand;
  cand.pieces = pa;
  cand.x.assign(n, 0.0);
  cand.y.assign(n, 0.0);

  double fixed_flex = 0.0;
  std::vector<std::size_t> middle;
  for (std::size_t i = 0; i < n; ++i) {
    const Prosumer& pro = inst.prosumers[i];
    switch (pa[i]) {
      case Piece::kLower:
        // The x < b piece is empty for x >= 0 unless b > 0.
        if (!(pro.b > 0.0)) return std::nullopt;
        cand.x[i] = 0.0;
        cand.y[i] = 0.0;
        break;
      case Piece::kUpper:
        // Open piece x > a*m + b; its cost infimum sits at the closure
        // price, shared with the middle piece's endpoint.
        cand.x[i] = std::max(0.0, pro.a * pro.m + pro.b);
        cand.y[i] = pro.m;
        fixed_flex += pro.m;
        break;
      case Piece::kMiddle:
        middle.push_back(i);
        break;
    }
  }

  const double remaining_cap = inst.f - fixed_flex;
  if (inst.cap_enabled && remaining_cap < 0.0) return std::nullopt;

  if (!middle.empty()) {
    ReducedQp qp;
    qp.cap = remaining_cap;
    qp.cap_enabled = inst.cap_enabled;
    for (std::size_t i : middle) {
      const Prosumer& pro = inst.prosumers[i];
      qp.quad.push_back(pro.a);
      qp.lin.push_back(pro.b - inst.p);
      qp.lower.push_back(pro.b < 0.0 ? -pro.b / pro.a : 0.0);
      qp.upper.push_back(pro.m);
      if (qp.lower.back() > qp.upper.back()) {
        throw InfeasibleProsumerError(
            static_cast<int>(i),
            "prosumer " + std::to_string(i) + " is inconsistent");
      }
    }
    QpSolution qs;
    try {
      qs = solve_capped_separable_qp(qp);
    } catch (const InfeasibleCapError&) {
      return std::nullopt;
    }
    for (std::size_t k = 0; k < middle.size(); ++k) {
      const std::size_t i = middle[k];
      const Prosumer& pro = inst.prosumers[i];
      cand.y[i] = qs.y[k];
      cand.x[i] = std::max(0.0, pro.a * qs.y[k] + pro.b);
    }
  }

  cand.objective = aggregator_cost(cand.x, cand.y, inst);
  return cand;
}

OracleCandidate brute_force_optimum(const MarketInstance& inst,
                                    int size_limit) {
  const std::size_t n = inst.size();
  if (n > static_cast<std::size_t>(size_limit)) {
    throw SizeLimitError("brute_force_optimum: " + std::to_string(n) +
                         " prosumers exceeds the limit of " +
                         std::to_string(size_limit));
  }
  // Same feasibility screen as the convex path, so both sides fail the
  // same instances the same way.
  const ReducedQp qp = reduce(inst);
  if (inst.cap_enabled) {
    double sum_lower = 0.0;
    for (double l : qp.lower) sum_lower += l;
    if (sum_lower > inst.f) {
      throw InfeasibleCapError(
          "brute_force_optimum: assumption 1 violated, every piece "
          "combination is infeasible");
    }
  }

  std::size_t combos = 1;
  for (std::size_t i = 0; i < n; ++i) combos *= 3;

  std::optional<OracleCandidate> best;
  PieceAssignment pa(n);
  for (std::size_t idx = 0; idx < combos; ++idx) {
    // Digit 0 is the most significant, so ascending idx enumerates
    // assignments in lexicographic order and strict improvement keeps
    // the lexicographically smallest tie.
    std::size_t rem = idx;
    for (std::size_t i = n; i-- > 0;) {
      pa[i] = static_cast<Piece>(rem % 3);
      rem /= 3;
    }
    auto cand = solve_piece_restricted(inst, pa);
    if (cand && (!best || cand->objective < best->objective)) {
      best = std::move(cand);
    }
  }
  if (!best) {
    throw InfeasibleCapError(
        "brute_force_optimum: no feasible piece combination");
  }
  return *std::move(best);
}

OracleCandidate grid_search_bilevel(const MarketInstance& inst, int steps) {
  const std::size_t n = inst.size();
  if (n > kGridSearchLimit) {
    throw SizeLimitError("grid_search_bilevel: n > " +
                         std::to_string(kGridSearchLimit));
  }
  if (steps < 2) {
    throw std::invalid_argument("grid_search_bilevel: steps must be >= 2");
  }

  double x_hi = 0.0;
  for (const Prosumer& pro : inst.prosumers) {
    x_hi = std::max(x_hi, pro.a * pro.m + pro.b);
  }
  x_hi += inst.p;

  std::optional<OracleCandidate> best;
  std::vector<int> ticks(n, 0);
  std::vector<double> x(n), y(n);
  const std::size_t points = [&] {
    std::size_t c = 1;
    for (std::size_t i = 0; i < n; ++i) c *= static_cast<std::size_t>(steps);
    return c;
  }();
  for (std::size_t iter = 0; iter < points; ++iter) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = x_hi * ticks[i] / (steps - 1);
      y[i] = best_response(x[i], inst.prosumers[i]);
      total += y[i];
    }
    if (!inst.cap_enabled || total <= inst.f) {
      const double obj = aggregator_cost(x, y, inst);
      if (!best || obj < best->objective) {
        best.emplace();
        best->x = x;
        best->y = y;
        best->objective = obj;
      }
    }
    for (std::size_t i = n; i-- > 0;) {
      if (++ticks[i] < steps) break;
      ticks[i] = 0;
    }
  }
  if (!best) {
    throw InfeasibleCapError(
        "grid_search_bilevel: no grid point satisfies the cap");
  }
  return *std::move(best);
}

}  // namespace flexmarket
