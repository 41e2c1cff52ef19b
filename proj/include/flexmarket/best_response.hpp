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

#ifndef FLEXMARKET_BEST_RESPONSE_HPP_
#define FLEXMARKET_BEST_RESPONSE_HPP_

#include <span>
#include <stdexcept>

#include "flexmarket/market_model.hpp"
#include "flexmarket/numeric.hpp"

namespace flexmarket {

/// A proposed price together with the flexibility it buys.
struct PriceFlexPair {
  double x = 0.0;  // EUR/kWh, >= 0
  double y = 0.0;  // kWh, in [0, m]
};

/// The prosumer's optimal reaction to a price x: zero below b, the linear
/// ramp (x - b)/a on [b, a*m + b], saturated at m above. Boundary ties
/// resolve to the middle piece, whose value is clamped into [0, m] so the
/// map is idempotent under price recovery.
inline double best_response(double x, const Prosumer& pro) {
  if (x < pro.b) return 0.0;
  if (x > pro.a * pro.m + pro.b) return pro.m;
  return clamp((x - pro.b) / pro.a, 0.0, pro.m);
}

/// Prosumer profit x*y - (a/2)*y^2 - b*y. Evaluates anywhere, including
/// off the best-response curve; callers own the bound check.
inline double prosumer_utility(const PriceFlexPair& pair,
                               const Prosumer& pro) {
  return pair.x * pair.y - 0.5 * pro.a * pair.y * pair.y - pro.b * pair.y;
}

/// Aggregator cost sum(x_i*y_i) + p*(f - sum(y_i)). Every solver reports
/// its objective through this one arithmetic path.
inline double aggregator_cost(std::span<const double> x,
                              std::span<const double> y,
                              const MarketInstance& inst) {
  if (x.size() != y.size() || x.size() != inst.size()) {
    throw std::invalid_argument(
        "aggregator_cost: vector lengths do not match the prosumer list");
  }
  double paid = 0.0;
  double bought = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    paid += x[i] * y[i];
    bought += y[i];
  }
  return paid + inst.p * (inst.f - bought);
}

}  // namespace flexmarket

#endif  // FLEXMARKET_BEST_RESPONSE_HPP_
