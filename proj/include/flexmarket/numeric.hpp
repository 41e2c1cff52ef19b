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

#ifndef FLEXMARKET_NUMERIC_HPP_
#define FLEXMARKET_NUMERIC_HPP_

#include <algorithm>
#include <cmath>
#include <string>

namespace flexmarket {

/// Default pass tolerance for KKT residual max-norms (absolute).
inline constexpr double kKktTol = 1e-9;

/// Relative tolerance for objective comparisons between solvers.
inline constexpr double kRelTol = 1e-8;

/// Absolute floor under which any two values compare equal.
inline constexpr double kAbsFloor = 1e-12;

/// Relative comparison with an absolute floor, used whenever two solver
/// objectives are checked against each other.
inline bool nearly_equal(double a, double b, double rel = kRelTol,
                         double abs_floor = kAbsFloor) {
  const double diff = std::abs(a - b);
  if (diff <= abs_floor) return true;
  return diff <= rel * std::max(std::abs(a), std::abs(b));
}

inline double clamp(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

/// Shortest round-trip decimal rendering of a double. All file formats
/// (JSON, CSV, LP) funnel through this so output is byte-stable.
std::string format_double(double v);

}  // namespace flexmarket

#endif  // FLEXMARKET_NUMERIC_HPP_
