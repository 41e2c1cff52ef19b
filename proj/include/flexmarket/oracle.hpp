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

#ifndef FLEXMARKET_ORACLE_HPP_
#define FLEXMARKET_ORACLE_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "flexmarket/convex_solver.hpp"
#include "flexmarket/market_model.hpp"

namespace flexmarket {

// Ground-truth solvers for small instances. They certify the convex
// solver; none of them share its optimization path.

/// Which branch of the best-response map a coordinate is pinned to.
enum class Piece : std::uint8_t { kLower = 0, kMiddle = 1, kUpper = 2 };

using PieceAssignment = std::vector<Piece>;

struct OracleCandidate {
  std::vector<double> x;
  std::vector<double> y;
  double objective = 0.0;
  PieceAssignment pieces;
};

inline constexpr int kBruteForceLimit = 12;
inline constexpr int kGridSearchLimit = 3;

/// Cost infimum over the closure of one piece combination. Lower pins
/// y_i = 0 with x_i = 0 (admissible only when b_i > 0), Upper pins
/// y_i = m_i at the closure price a_i*m_i + b_i, Middle coordinates solve
/// the residual separable QP under the leftover cap. Returns nullopt when
/// the fixed flexibilities already exceed the cap or a Lower label is
/// inadmissible.
std::optional<OracleCandidate> solve_piece_restricted(
    const MarketInstance& inst, const PieceAssignment& pa);

/// Exhaustive minimum over all 3^n piece combinations; ties resolve to
/// the lexicographically smallest assignment (Lower < Middle < Upper).
/// Throws SizeLimitError beyond size_limit prosumers and
/// InfeasibleProsumerError / InfeasibleCapError like the convex path.
OracleCandidate brute_force_optimum(const MarketInstance& inst,
                                    int size_limit = kBruteForceLimit);

/// Direct simulation of the price game: enumerates x on a uniform grid
/// over [0, max_i(a_i*m_i + b_i) + p] per coordinate, maps through the
/// best response, discards cap-violating points. The result is always >=
/// the true optimum and converges to it as steps grows. n <= 3 only.
OracleCandidate grid_search_bilevel(const MarketInstance& inst, int steps);

}  // namespace flexmarket

#endif  // FLEXMARKET_ORACLE_HPP_
