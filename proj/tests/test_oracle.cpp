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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "flexmarket/best_response.hpp"
#include "flexmarket/errors.hpp"
#include "flexmarket/oracle.hpp"

using namespace flexmarket;

namespace {

MarketInstance example1() {
  MarketInstance inst;
  inst.prosumers = {{1.0, 2.0, 6.0, {}}, {1.0, 2.0, 6.0, {}}};
  inst.p = 10.0;
  inst.f = 30.0;
  return inst;
}

struct RandomInstances {
  std::mt19937_64 rng;
  explicit RandomInstances(std::uint64_t seed) : rng(seed) {}

  double uni(double lo, double hi) {
    return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
  }

  MarketInstance next(int n) {
    MarketInstance inst;
    inst.p = uni(0.0, 5.0);
    double total_m = 0.0;
    double free_flex = 0.0;
    for (int i = 0; i < n; ++i) {
      Prosumer pro;
      pro.a = uni(0.1, 3.0);
      pro.m = uni(0.05, 2.0);
      pro.b = uni(-1.0, 2.0);
      if (pro.b < 0.0 && -pro.b / pro.a > pro.m) {
        pro.b = -pro.a * pro.m * uni(0.0, 1.0);
      }
      if (pro.b < 0.0) free_flex += -pro.b / pro.a;
      total_m += pro.m;
      inst.prosumers.push_back(pro);
    }
    const double u = uni(0.0, 1.0);
    inst.f = free_flex + u * u * total_m;
    return inst;
  }
};

}  // namespace

TEST_CASE("piece-restricted solves on the two-prosumer instance") {
  const auto inst = example1();

  auto mid = solve_piece_restricted(inst, {Piece::kMiddle, Piece::kMiddle});
  REQUIRE(mid.has_value());
  CHECK(mid->objective == doctest::Approx(268.0));

  auto up = solve_piece_restricted(inst, {Piece::kUpper, Piece::kUpper});
  REQUIRE(up.has_value());
  CHECK(up->y[0] == 6.0);
  CHECK(up->x[0] == doctest::Approx(8.0));  // closure price a*m + b
  CHECK(up->objective == doctest::Approx(276.0));

  auto low = solve_piece_restricted(inst, {Piece::kLower, Piece::kLower});
  REQUIRE(low.has_value());
  CHECK(low->y[0] == 0.0);
  CHECK(low->objective == doctest::Approx(300.0));  // p * f
}

TEST_CASE("lower piece is inadmissible without a positive offset") {
  MarketInstance inst;
  inst.prosumers = {{1.0, 0.0, 2.0, {}}};
  inst.p = 1.0;
  inst.f = 5.0;
  CHECK_FALSE(solve_piece_restricted(inst, {Piece::kLower}).has_value());
  inst.prosumers[0].b = -0.5;
  CHECK_FALSE(solve_piece_restricted(inst, {Piece::kLower}).has_value());
}

TEST_CASE("piece assignment beyond the cap is infeasible") {
  MarketInstance inst;
  inst.prosumers = {{1.0, 1.0, 4.0, {}}, {1.0, 1.0, 4.0, {}}};
  inst.p = 2.0;
  inst.f = 6.0;
  CHECK_FALSE(
      solve_piece_restricted(inst, {Piece::kUpper, Piece::kUpper})
          .has_value());
}

TEST_CASE("brute force finds the global minimum") {
  const OracleCandidate best = brute_force_optimum(example1());
  CHECK(best.objective == doctest::Approx(268.0));
  CHECK(best.pieces ==
        PieceAssignment{Piece::kMiddle, Piece::kMiddle});
}

TEST_CASE("brute force tie resolves lexicographically") {
  MarketInstance inst;
  inst.prosumers = {{1.0, 3.0, 2.0, {}}};
  inst.p = 1.0;
  inst.f = 0.0;
  const OracleCandidate best = brute_force_optimum(inst);
  CHECK(best.objective == 0.0);
  CHECK(best.pieces == PieceAssignment{Piece::kLower});
}

TEST_CASE("brute force surfaces infeasibility and size limits") {
  MarketInstance violating;
  violating.prosumers = {{1.0, -2.0, 3.0, {}}};
  violating.p = 1.0;
  violating.f = 1.0;  // free flexibility 2 exceeds f
  CHECK_THROWS_AS(brute_force_optimum(violating), InfeasibleCapError);

  MarketInstance big;
  big.prosumers.assign(13, Prosumer{1.0, 0.0, 1.0, {}});
  big.p = 1.0;
  big.f = 13.0;
  CHECK_THROWS_AS(brute_force_optimum(big), SizeLimitError);

  MarketInstance three;
  three.prosumers.assign(3, Prosumer{1.0, 0.0, 1.0, {}});
  three.p = 1.0;
  three.f = 3.0;
  CHECK_THROWS_AS(brute_force_optimum(three, 2), SizeLimitError);
  CHECK_NOTHROW(brute_force_optimum(three, 3));
}

TEST_CASE("every candidate lies on the response graph") {
  RandomInstances gen(31);
  for (int it = 0; it < 50; ++it) {
    const MarketInstance inst = gen.next(1 + it % 4);
    const OracleCandidate best = brute_force_optimum(inst);
    for (std::size_t i = 0; i < inst.size(); ++i) {
      CHECK(std::abs(best_response(best.x[i], inst.prosumers[i]) -
                     best.y[i]) <= 1e-9);
    }
  }
}

TEST_CASE("grid search brackets the optimum") {
  const auto inst = example1();
  const OracleCandidate grid = grid_search_bilevel(inst, 401);
  CHECK(grid.objective >= 268.0 - 1e-9);
  CHECK(grid.objective <= 268.0 + 0.5);

  MarketInstance single;
  single.prosumers = {{2.0, 0.0, 10.0, {}}};
  single.p = 0.6;
  single.f = 1.0;
  const OracleCandidate fine = grid_search_bilevel(single, 2001);
  CHECK(fine.objective >= 0.555 - 1e-9);
  CHECK(fine.objective <= 0.555 + 1e-3);

  MarketInstance empty_f;
  empty_f.prosumers = {{1.0, 2.0, 3.0, {}}};
  empty_f.p = 4.0;
  empty_f.f = 0.0;
  CHECK(grid_search_bilevel(empty_f, 11).objective == 0.0);
}

TEST_CASE("grid search is nonincreasing on nested grids") {
  RandomInstances gen(32);
  for (int it = 0; it < 30; ++it) {
    const MarketInstance inst = gen.next(1 + it % 2);
    const int steps = 21 + 2 * (it % 5);
    const double coarse = grid_search_bilevel(inst, steps).objective;
    const double fine =
        grid_search_bilevel(inst, 2 * steps - 1).objective;
    CHECK(fine <= coarse + 1e-12);
  }
}

TEST_CASE("grid search rejects large instances") {
  MarketInstance inst;
  inst.prosumers.assign(4, Prosumer{1.0, 0.0, 1.0, {}});
  inst.p = 1.0;
  inst.f = 4.0;
  CHECK_THROWS_AS(grid_search_bilevel(inst, 11), SizeLimitError);
  CHECK_THROWS_AS(grid_search_bilevel(example1(), 1),
                  std::invalid_argument);
}

TEST_CASE("brute force certifies the convex solver on random instances") {
  RandomInstances gen(33);
  for (int it = 0; it < 200; ++it) {
    const MarketInstance inst = gen.next(1 + it % 6);
    const OracleCandidate brute = brute_force_optimum(inst);
    const Allocation alloc = solve(inst);
    CHECK(nearly_equal(brute.objective, alloc.objective));
    // The enumeration can never undercut the convex optimum.
    CHECK(brute.objective >= alloc.objective - 1e-9);
  }
}

TEST_CASE("grid search upper-bounds the convex optimum") {
  RandomInstances gen(34);
  for (int it = 0; it < 30; ++it) {
    const MarketInstance inst = gen.next(1 + it % 3);
    const Allocation alloc = solve(inst);
    const OracleCandidate grid = grid_search_bilevel(inst, 41);
    CHECK(grid.objective >= alloc.objective - 1e-9);
  }
}
