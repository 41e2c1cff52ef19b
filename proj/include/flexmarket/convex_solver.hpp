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

#ifndef FLEXMARKET_CONVEX_SOLVER_HPP_
#define FLEXMARKET_CONVEX_SOLVER_HPP_

#include <span>
#include <vector>

#include <json.hpp>

#include "flexmarket/market_model.hpp"
#include "flexmarket/numeric.hpp"

namespace flexmarket {

/// The market problem rewritten over y alone:
///   min sum_i (quad_i*y_i^2 + lin_i*y_i) + constant,
///   lower_i <= y_i <= upper_i, sum_i y_i <= cap (if cap_enabled),
/// where quad_i = a_i, lin_i = b_i - p, lower_i = max(0, -b_i/a_i)
/// (prices stay nonnegative), upper_i = m_i and constant = p*f.
struct ReducedQp {
  std::vector<double> quad;
  std::vector<double> lin;
  std::vector<double> lower;
  std::vector<double> upper;
  double cap = 0.0;
  bool cap_enabled = true;
  double constant = 0.0;

  std::size_t size() const { return quad.size(); }
};

/// Price interval left open by a zero-flexibility coordinate: any price in
/// [lo, hi] buys the same y_i = 0, and the allocation reports the canonical
/// lo = 0 endpoint.
struct PriceInterval {
  int index = 0;
  double lo = 0.0;
  double hi = 0.0;
};

struct Allocation {
  std::vector<double> x;   // personalized prices, EUR/kWh
  std::vector<double> y;   // flexibilities, kWh
  double mu = 0.0;         // multiplier of sum(y) <= f, EUR/kWh
  double objective = 0.0;  // EUR
  bool cap_binding = false;
  double kkt_residual = 0.0;
  std::vector<PriceInterval> price_intervals;  // degenerate coordinates
};

/// Residual report of the reduced-space optimality conditions.
struct KktReport {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;
  double max_residual = 0.0;

  bool pass(double tol = kKktTol) const { return max_residual <= tol; }
};

/// Builds the reduced QP. Throws InfeasibleProsumerError if some prosumer
/// has -b/a > m (its box in y-space is empty).
ReducedQp reduce(const MarketInstance& inst);

struct QpSolution {
  std::vector<double> y;
  double mu = 0.0;
};

/// Exact minimizer of the reduced QP. Each coordinate is the clamp of
/// (p - b_i - mu)/(2 a_i) into its box; the cap multiplier mu is zero when
/// the cap is slack and otherwise located by sorting the 2n clamp
/// breakpoints and solving the bracketing linear segment in closed form.
/// Throws InfeasibleCapError when sum(lower) > cap with the cap enabled.
QpSolution solve_capped_separable_qp(const ReducedQp& qp);

/// Prices from flexibilities, x_i = a_i*y_i + b_i. A coordinate with
/// y_i = 0 and b_i > 0 admits any price in [0, b_i]; the canonical 0 is
/// returned and the interval recorded when `intervals` is non-null.
std::vector<double> recover_prices(std::span<const double> y,
                                   const MarketInstance& inst,
                                   std::vector<PriceInterval>* intervals);

/// Global optimum of the bilevel market problem via its convex equivalent:
/// reduce, solve the capped separable QP, recover prices, then re-map each
/// y_i through the best-response curve so the fixed point holds exactly.
Allocation solve(const MarketInstance& inst);

/// Checks an allocation against the reduced-space KKT system:
/// stationarity 2*a_i*y_i + (b_i - p) + mu at free coordinates, bound
/// multipliers at active ones, primal feasibility, mu >= 0 and
/// mu*(f - sum y) = 0. Reports residuals, never throws.
KktReport verify_kkt(const Allocation& alloc, const MarketInstance& inst,
                     double tol = kKktTol);

/// {"x":[..],"y":[..],"mu":..,"objective":..,"cap_binding":..,
///  "kkt_residual":..}
nlohmann::ordered_json allocation_to_json(const Allocation& alloc);

}  // namespace flexmarket

#endif  // FLEXMARKET_CONVEX_SOLVER_HPP_
