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

#ifndef FLEXMARKET_MARKET_MODEL_HPP_
#define FLEXMARKET_MARKET_MODEL_HPP_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace flexmarket {

// One balancing interval is 5 minutes; flexibilities are stored in kWh so
// prices in EUR/kWh multiply without unit juggling.
inline constexpr double kDefaultDtHours = 300.0 / 3600.0;

enum class DeviceKind { kHeatPump, kMicroChp };

/// Regulation direction, used separately for the aggregator and the TSO.
enum class Direction { kUp, kDown };

/// Controllable device behind a prosumer. The heat pump consumes
/// electricity, the micro-CHP produces it; both expose an electrical
/// operating point and a nameplate maximum.
struct DeviceSpec {
  DeviceKind kind = DeviceKind::kHeatPump;
  double nominal_input_power_kw = 0.0;     // fuel side, micro-CHP only
  double nominal_electric_power_kw = 0.0;  // P_max
  double current_electric_power_kw = 0.0;  // P

  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

/// Retail energy prices plus the TSO balancing price, all EUR/kWh.
struct PriceBook {
  double pi_e = 0.0;  // electricity
  double pi_g = 0.0;  // gas
  double p = 0.0;     // ex-ante balancing price

  void validate() const;
};

struct RegulationCase {
  Direction aggregator = Direction::kUp;
  Direction tso = Direction::kUp;
};

/// What the aggregator should do for a given regulation case. Only the
/// aligned cases require optimization; the crossed cases settle directly
/// with the TSO.
enum class CaseAction { kOptimize, kSellToTso, kTsoPaysToConsume };

/// One flexibility seller: utility x*y - (a/2)*y^2 - b*y over y in [0, m].
struct Prosumer {
  double a = 1.0;  // discomfort curvature, EUR/kWh^2, > 0
  double b = 0.0;  // cost offset of providing flexibility, EUR/kWh
  double m = 0.0;  // maximum flexibility, kWh, >= 0
  std::optional<DeviceSpec> device;  // provenance, when derived

  void validate() const;
};

/// One balancing interval to solve.
struct MarketInstance {
  std::vector<Prosumer> prosumers;
  double p = 0.0;           // TSO price, EUR/kWh
  double f = 0.0;           // requested imbalance, kWh, >= 0
  bool cap_enabled = true;  // whether sum(y) <= f applies

  std::size_t size() const { return prosumers.size(); }
  void validate() const;
};

/// Cost offset b for a device given the aggregator's regulation direction.
/// Heat pump: pi_e when up, -pi_g when down. Micro-CHP: -c*pi_e when up,
/// c*pi_g when down, with c the fuel-to-electricity power ratio.
double derive_b(const DeviceSpec& device, Direction direction,
                const PriceBook& prices);

/// Maximum flexibility in kWh over an interval of dt_hours. Headroom
/// (P_max - P) or the current operating point P, depending on device kind
/// and direction; never negative for a valid device.
double derive_m(const DeviceSpec& device, Direction direction,
                double dt_hours);

/// Cases 1 and 3 (directions aligned) call for optimization; in cases 2
/// and 4 the aggregator simply settles with the TSO.
CaseAction classify_case(RegulationCase reg);

struct Assumption1Result {
  bool holds = true;
  double free_flex = 0.0;  // sum over b_i < 0 of -b_i/a_i, kWh
};

/// Total flexibility offered at zero price must not exceed the requested
/// imbalance f, or the capped problem loses its feasibility guarantee.
/// Always holds when the cap is disabled.
Assumption1Result check_assumption1(const MarketInstance& inst);

// JSON instance format, deterministic field order on write:
// {"p": .., "f": .., "cap_enabled": .., "prosumers": [{"a","b","m"}, ..]}
nlohmann::ordered_json instance_to_json(const MarketInstance& inst);
MarketInstance instance_from_json(const nlohmann::json& j);

MarketInstance load_instance(const std::string& path);
void save_instance(const MarketInstance& inst, const std::string& path);

const char* to_string(Direction d);
const char* to_string(CaseAction a);

}  // namespace flexmarket

#endif  // FLEXMARKET_MARKET_MODEL_HPP_
