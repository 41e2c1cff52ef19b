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

#include "flexmarket/market_model.hpp"

using namespace flexmarket;

namespace {

DeviceSpec heat_pump(double p, double pmax) {
  return {DeviceKind::kHeatPump, 0.0, pmax, p};
}

DeviceSpec micro_chp(double in_kw, double out_kw, double p) {
  return {DeviceKind::kMicroChp, in_kw, out_kw, p};
}

const PriceBook kPrices{0.1707, 0.0861, 0.6};

}  // namespace

TEST_CASE("derive_b matches the published device parameters") {
  // Micro-CHP type 1 in down-regulation: c * pi_g = 8 * 0.0861.
  CHECK(derive_b(micro_chp(8.0, 1.0, 0.5), Direction::kDown, kPrices) ==
        doctest::Approx(0.6888).epsilon(1e-12));
  // Heat pump in up-regulation pays the retail electricity price.
  CHECK(derive_b(heat_pump(0.3, 1.1), Direction::kUp, kPrices) ==
        doctest::Approx(0.1707).epsilon(1e-12));
  // Micro-CHP type 1 in up-regulation: -c * pi_e.
  CHECK(derive_b(micro_chp(8.0, 1.0, 0.5), Direction::kUp, kPrices) ==
        doctest::Approx(-1.3656).epsilon(1e-12));
}

TEST_CASE("derive_b rejects a zero electric rating") {
  DeviceSpec bad = micro_chp(8.0, 0.0, 0.0);
  CHECK_THROWS_AS(derive_b(bad, Direction::kUp, kPrices), std::domain_error);
}

TEST_CASE("derive_m uses headroom or operating point per direction") {
  const double dt = kDefaultDtHours;
  CHECK(derive_m(heat_pump(0.3, 1.1), Direction::kUp, dt) ==
        doctest::Approx(0.8 / 12.0).epsilon(1e-12));
  CHECK(derive_m(heat_pump(0.3, 1.1), Direction::kDown, dt) ==
        doctest::Approx(0.025).epsilon(1e-12));
  CHECK(derive_m(micro_chp(8.0, 1.0, 0.0), Direction::kUp, dt) == 0.0);
  CHECK_THROWS_AS(derive_m(heat_pump(0.3, 1.1), Direction::kUp, 0.0),
                  std::invalid_argument);
}

TEST_CASE("derive_m is nonnegative and swaps with direction") {
  std::mt19937_64 rng(7);
  auto uni = [&](double lo, double hi) {
    return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
  };
  for (int it = 0; it < 200; ++it) {
    const double pmax = uni(0.1, 10.0);
    const double p = uni(0.0, pmax);
    const double dt = uni(0.01, 1.0);
    for (DeviceSpec dev : {heat_pump(p, pmax), micro_chp(5.0, pmax, p)}) {
      const double up = derive_m(dev, Direction::kUp, dt);
      const double down = derive_m(dev, Direction::kDown, dt);
      CHECK(up >= 0.0);
      CHECK(down >= 0.0);
      // One direction sells headroom, the other the operating point.
      CHECK(up + down == doctest::Approx(pmax * dt).epsilon(1e-12));
    }
  }
}

TEST_CASE("derive_b sign convention") {
  std::mt19937_64 rng(8);
  auto uni = [&](double lo, double hi) {
    return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
  };
  for (int it = 0; it < 200; ++it) {
    PriceBook prices{uni(0.0, 1.0), uni(0.0, 1.0), uni(0.0, 1.0)};
    const DeviceSpec hp = heat_pump(0.2, 1.0);
    const DeviceSpec chp = micro_chp(uni(0.5, 9.0), uni(0.2, 2.0), 0.1);
    CHECK(derive_b(hp, Direction::kUp, prices) >= 0.0);
    CHECK(derive_b(hp, Direction::kDown, prices) <= 0.0);
    CHECK(derive_b(chp, Direction::kUp, prices) <= 0.0);
    CHECK(derive_b(chp, Direction::kDown, prices) >= 0.0);
  }
}

TEST_CASE("classify_case") {
  CHECK(classify_case({Direction::kUp, Direction::kUp}) ==
        CaseAction::kOptimize);
  CHECK(classify_case({Direction::kDown, Direction::kDown}) ==
        CaseAction::kOptimize);
  CHECK(classify_case({Direction::kUp, Direction::kDown}) ==
        CaseAction::kSellToTso);
  CHECK(classify_case({Direction::kDown, Direction::kUp}) ==
        CaseAction::kTsoPaysToConsume);
}

TEST_CASE("check_assumption1") {
  MarketInstance inst;
  inst.prosumers = {{1.0, -1.0, 10.0, {}}, {1.0, -2.0, 10.0, {}}};
  inst.p = 1.0;

  inst.f = 5.0;
  auto res = check_assumption1(inst);
  CHECK(res.holds);
  CHECK(res.free_flex == doctest::Approx(3.0));

  inst.f = 2.0;
  res = check_assumption1(inst);
  CHECK_FALSE(res.holds);
  CHECK(res.free_flex == doctest::Approx(3.0));

  inst.prosumers = {{1.0, 0.5, 1.0, {}}, {2.0, 0.0, 1.0, {}}};
  inst.f = 0.0;
  res = check_assumption1(inst);
  CHECK(res.holds);
  CHECK(res.free_flex == 0.0);

  // Cap disabled: holds regardless.
  inst.prosumers = {{1.0, -5.0, 10.0, {}}};
  inst.f = 0.0;
  inst.cap_enabled = false;
  CHECK(check_assumption1(inst).holds);
}

TEST_CASE("instance JSON round trip with deterministic field order") {
  MarketInstance inst;
  inst.p = 10.0;
  inst.f = 30.0;
  inst.prosumers = {{1.0, 2.0, 6.0, {}}, {1.0, 2.0, 6.0, {}}};

  const std::string text = instance_to_json(inst).dump();
  CHECK(text ==
        R"({"p":10.0,"f":30.0,"cap_enabled":true,"prosumers":)"
        R"([{"a":1.0,"b":2.0,"m":6.0},{"a":1.0,"b":2.0,"m":6.0}]})");

  const MarketInstance back =
      instance_from_json(nlohmann::json::parse(text));
  CHECK(back.p == inst.p);
  CHECK(back.f == inst.f);
  CHECK(back.cap_enabled == inst.cap_enabled);
  REQUIRE(back.size() == 2);
  CHECK(back.prosumers[1].b == 2.0);
}

TEST_CASE("instance validation rejects bad parameters") {
  nlohmann::json j = nlohmann::json::parse(
      R"({"p":1.0,"f":1.0,"prosumers":[{"a":0.0,"b":0.0,"m":1.0}]})");
  CHECK_THROWS_AS(instance_from_json(j), std::invalid_argument);

  j["prosumers"][0]["a"] = 1.0;
  j["prosumers"][0]["m"] = -1.0;
  CHECK_THROWS_AS(instance_from_json(j), std::invalid_argument);

  j["prosumers"][0]["m"] = 1.0;
  j["f"] = -2.0;
  CHECK_THROWS_AS(instance_from_json(j), std::invalid_argument);
}

TEST_CASE("device invariants") {
  CHECK_THROWS_AS(heat_pump(1.2, 1.1).validate(), std::invalid_argument);
  CHECK_THROWS_AS(micro_chp(0.0, 1.0, 0.5).validate(),
                  std::invalid_argument);
  CHECK_NOTHROW(heat_pump(0.3, 1.1).validate());
}
