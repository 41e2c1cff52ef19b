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

#include "flexmarket/convex_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "flexmarket/best_response.hpp"
#include "flexmarket/errors.hpp"

namespace flexmarket {

ReducedQp reduce(const MarketInstance& inst) {
  const std::size_t n = inst.size();
  ReducedQp qp;
  qp.quad.resize(n);
  qp.lin.resize(n);
  qp.lower.resize(n);
  qp.upper.resize(n);
  qp.cap = inst.f;
  qp.cap_enabled = inst.cap_enabled;
  qp.constant = inst.p * inst.f;
  for (std::size_t i = 0; i < n; ++i) {
    const Prosumer& pro = inst.prosumers[i];
    qp.quad[i] = pro.a;
    qp.lin[i] = pro.b - inst.p;
    qp.lower[i] = pro.b < 0.0 ? -pro.b / pro.a : 0.0;
    qp.upper[i] = pro.m;
    if (qp.lower[i] > qp.upper[i]) {
      throw InfeasibleProsumerError(
          static_cast<int>(i),
          "prosumer " + std::to_string(i) +
              " is inconsistent: zero-price flexibility -b/a = " +
              format_double(qp.lower[i]) + " exceeds m = " +
              format_double(qp.upper[i]));
    }
  }
  return qp;
}

namespace {

// y_i as a function of the cap multiplier.
inline double coordinate_at(const ReducedQp& qp, std::size_t i, double mu) {
  return clamp((-qp.lin[i] - mu) / (2.0 * qp.quad[i]), qp.lower[i],
               qp.upper[i]);
}

inline double total_at(const ReducedQp& qp, double mu) {
  double s = 0.0;
  for (std::size_t i = 0; i < qp.size(); ++i) s += coordinate_at(qp, i, mu);
  return s;
}

}  // namespace

QpSolution solve_capped_separable_qp(const ReducedQp& qp) {
  const std::size_t n = qp.size();
  QpSolution sol;
  sol.mu = 0.0;
  sol.y.resize(n);

  for (std::size_t i = 0; i < n; ++i) sol.y[i] = coordinate_at(qp, i, 0.0);
  if (!qp.cap_enabled) return sol;

  double sum_lower = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum_lower += qp.lower[i];
  if (sum_lower > qp.cap) {
    throw InfeasibleCapError(
        "total zero-price flexibility " + format_double(sum_lower) +
        " exceeds the requested imbalance f = " + format_double(qp.cap) +
        " (assumption 1 violated with the cap enabled)");
  }

  const double total0 = std::accumulate(sol.y.begin(), sol.y.end(), 0.0);
  if (total0 <= qp.cap) return sol;

  // The cap binds: sum_i y_i(mu) is piecewise linear and nonincreasing in
  // mu, with breakpoints where a coordinate enters or leaves its clamp.
  // Locate the bracketing segment and solve it in closed form.
  std::vector<double> breaks;
  breaks.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double at_upper = -qp.lin[i] - 2.0 * qp.quad[i] * qp.upper[i];
    const double at_lower = -qp.lin[i] - 2.0 * qp.quad[i] * qp.lower[i];
    if (at_upper > 0.0) breaks.push_back(at_upper);
    if (at_lower > 0.0) breaks.push_back(at_lower);
  }
  std::sort(breaks.begin(), breaks.end());

  // First breakpoint where the total has dropped to the cap or below.
  // total_at is evaluated fresh at segment ends rather than patched
  // incrementally, so coincident breakpoints need no special casing.
  auto it = std::partition_point(
      breaks.begin(), breaks.end(),
      [&](double t) { return total_at(qp, t) - qp.cap > 0.0; });
  double left = 0.0;
  double right;
  if (it == breaks.end()) {
    // All clamped at the last breakpoint and still above the cap can only
    // be rounding noise; sum(lower) <= cap was checked above.
    right = breaks.empty() ? 0.0 : breaks.back();
    left = right;
  } else {
    right = *it;
    left = it == breaks.begin() ? 0.0 : *(it - 1);
  }

  // On (left, right) the active set is fixed: a coordinate is clamped iff
  // its regime interval does not cover the open segment. Segment ends are
  // consecutive breakpoints, so the classification is exact.
  double inv_slope = 0.0;  // sum over free coordinates of 1/(2a)
  double free_base = 0.0;  // sum over free coordinates of (p - b)/(2a)
  double clamped = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double at_upper = -qp.lin[i] - 2.0 * qp.quad[i] * qp.upper[i];
    const double at_lower = -qp.lin[i] - 2.0 * qp.quad[i] * qp.lower[i];
    if (at_upper >= right) {
      clamped += qp.upper[i];
    } else if (at_lower <= left) {
      clamped += qp.lower[i];
    } else {
      inv_slope += 1.0 / (2.0 * qp.quad[i]);
      free_base += -qp.lin[i] / (2.0 * qp.quad[i]);
    }
  }

  double mu;
  if (inv_slope > 0.0) {
    mu = (free_base + clamped - qp.cap) / inv_slope;
    mu = clamp(mu, left, right);
  } else {
    // Flat segment: the total already equals the cap at its left end.
    mu = left;
  }

  sol.mu = mu;
  for (std::size_t i = 0; i < n; ++i) sol.y[i] = coordinate_at(qp, i, mu);

  // mu quantization limits how precisely (p - b - mu)/(2a) can place the
  // coordinates when p - b dwarfs 2a*y; close the remaining cap gap
  // directly over the interior coordinates, which share the gap in
  // proportion to 1/(2a).
  double total = std::accumulate(sol.y.begin(), sol.y.end(), 0.0);
  double weight = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (sol.y[i] > qp.lower[i] && sol.y[i] < qp.upper[i]) {
      weight += 1.0 / (2.0 * qp.quad[i]);
    }
  }
  if (weight > 0.0 && total != qp.cap) {
    const double gap = qp.cap - total;
    for (std::size_t i = 0; i < n; ++i) {
      if (sol.y[i] > qp.lower[i] && sol.y[i] < qp.upper[i]) {
        sol.y[i] = clamp(sol.y[i] + gap / (2.0 * qp.quad[i] * weight),
                         qp.lower[i], qp.upper[i]);
      }
    }
  }
  return sol;
}

std::vector<double> recover_prices(std::span<const double> y,
                                   const MarketInstance& inst,
                                   std::vector<PriceInterval>* intervals) {
  std::vector<double> x(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Prosumer& pro = inst.prosumers[i];
    if (y[i] == 0.0 && pro.b > 0.0) {
      // Any price in [0, b] buys y = 0; report the canonical zero.
      x[i] = 0.0;
      if (intervals) {
        intervals->push_back({static_cast<int>(i), 0.0, pro.b});
      }
    } else {
      x[i] = std::max(0.0, pro.a * y[i] + pro.b);
    }
  }
  return x;
}

Allocation solve(const MarketInstance& inst) {
  const ReducedQp qp = reduce(inst);
  const QpSolution qs = solve_capped_separable_qp(qp);

  Allocation alloc;
  alloc.mu = qs.mu;
  alloc.cap_binding = inst.cap_enabled && qs.mu > 0.0;
  alloc.x = recover_prices(qs.y, inst, &alloc.price_intervals);
  // Re-map through the response curve so best_response(x_i) == y_i holds
  // bit for bit, not just to rounding error.
  alloc.y.resize(qs.y.size());
  for (std::size_t i = 0; i < qs.y.size(); ++i) {
    alloc.y[i] = best_response(alloc.x[i], inst.prosumers[i]);
  }
  alloc.objective = aggregator_cost(alloc.x, alloc.y, inst);
  alloc.kkt_residual = verify_kkt(alloc, inst).max_residual;
  return alloc;
}

KktReport verify_kkt(const Allocation& alloc, const MarketInstance& inst,
                     double /*tol*/) {
  KktReport rep;
  const std::size_t n = inst.size();
  if (alloc.y.size() != n) {
    rep.primal = rep.max_residual = std::numeric_limits<double>::infinity();
    return rep;
  }
  // A coordinate within this distance of a bound counts as active; the
  // solver itself lands on bounds exactly or within an ulp.
  constexpr double kActiveTol = 1e-12;

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Prosumer& pro = inst.prosumers[i];
    const double lower = pro.b < 0.0 ? -pro.b / pro.a : 0.0;
    const double upper = pro.m;
    const double y = alloc.y[i];

    rep.primal = std::max({rep.primal, lower - y, y - upper});
    total += y;

    const double grad = 2.0 * pro.a * y + (pro.b - inst.p) + alloc.mu;
    const bool at_lower = std::abs(y - lower) <= kActiveTol;
    const bool at_upper = std::abs(upper - y) <= kActiveTol;
    if (at_lower && grad >= 0.0) {
      rep.complementarity =
          std::max(rep.complementarity, grad * std::abs(y - lower));
    } else if (at_upper && grad <= 0.0) {
      rep.complementarity =
          std::max(rep.complementarity, -grad * std::abs(upper - y));
    } else {
      rep.stationarity = std::max(rep.stationarity, std::abs(grad));
    }
  }

  rep.dual = std::max(0.0, -alloc.mu);
  if (inst.cap_enabled) {
    rep.primal = std::max(rep.primal, total - inst.f);
    rep.complementarity =
        std::max(rep.complementarity, std::abs(alloc.mu * (inst.f - total)));
  } else {
    rep.complementarity = std::max(rep.complementarity, std::abs(alloc.mu));
  }
  rep.primal = std::max(rep.primal, 0.0);

  rep.max_residual = std::max(
      {rep.stationarity, rep.primal, rep.dual, rep.complementarity});
  return rep;
}

nlohmann::ordered_json allocation_to_json(const Allocation& alloc) {
  nlohmann::ordered_json j;
  j["x"] = alloc.x;
  j["y"] = alloc.y;
  j["mu"] = alloc.mu;
  j["objective"] = alloc.objective;
  j["cap_binding"] = alloc.cap_binding;
  j["kkt_residual"] = alloc.kkt_residual;
  return j;
}

}  // namespace flexmarket
