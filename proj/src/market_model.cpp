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

#include "flexmarket/market_model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "flexmarket/numeric.hpp"

namespace flexmarket {

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

void DeviceSpec::validate() const {
  if (!std::isfinite(nominal_input_power_kw) ||
      !std::isfinite(nominal_electric_power_kw) ||
      !std::isfinite(current_electric_power_kw)) {
    throw std::invalid_argument("DeviceSpec: powers must be finite");
  }
  if (current_electric_power_kw < 0.0 ||
      current_electric_power_kw > nominal_electric_power_kw) {
    throw std::invalid_argument(
        "DeviceSpec: current power must lie in [0, nominal]");
  }
  if (kind == DeviceKind::kMicroChp &&
      (nominal_input_power_kw <= 0.0 || nominal_electric_power_kw <= 0.0)) {
    throw std::invalid_argument(
        "DeviceSpec: micro-CHP needs positive nominal powers");
  }
}

void PriceBook::validate() const {
  if (!(pi_e >= 0.0) || !(pi_g >= 0.0) || !(p >= 0.0)) {
    throw std::invalid_argument("PriceBook: prices must be nonnegative");
  }
}

void Prosumer::validate() const {
  if (!std::isfinite(a) || !(a > 0.0)) {
    throw std::invalid_argument("Prosumer: a must be positive and finite");
  }
  if (!std::isfinite(b)) {
    throw std::invalid_argument("Prosumer: b must be finite");
  }
  if (!std::isfinite(m) || m < 0.0) {
    throw std::invalid_argument("Prosumer: m must be nonnegative and finite");
  }
  if (device) device->validate();
}

void MarketInstance::validate() const {
  if (!std::isfinite(p) || p < 0.0) {
    throw std::invalid_argument("MarketInstance: p must be nonnegative");
  }
  if (!std::isfinite(f) || f < 0.0) {
    throw std::invalid_argument("MarketInstance: f must be nonnegative");
  }
  for (const Prosumer& pro : prosumers) pro.validate();
}

double derive_b(const DeviceSpec& device, Direction direction,
                const PriceBook& prices) {
  switch (device.kind) {
    case DeviceKind::kHeatPump:
      return direction == Direction::kUp ? prices.pi_e : -prices.pi_g;
    case DeviceKind::kMicroChp: {
      if (device.nominal_electric_power_kw == 0.0) {
        throw std::domain_error(
            "derive_b: micro-CHP with zero nominal electric power");
      }
      const double c =
          device.nominal_input_power_kw / device.nominal_electric_power_kw;
      return direction == Direction::kUp ? -c * prices.pi_e : c * prices.pi_g;
    }
  }
  throw std::logic_error("derive_b: unknown device kind");
}

double derive_m(const DeviceSpec& device, Direction direction,
                double dt_hours) {
  if (!(dt_hours > 0.0)) {
    throw std::invalid_argument("derive_m: dt_hours must be positive");
  }
  const double headroom =
      device.nominal_electric_power_kw - device.current_electric_power_kw;
  const bool up = direction == Direction::kUp;
  switch (device.kind) {
    case DeviceKind::kHeatPump:
      return (up ? headroom : device.current_electric_power_kw) * dt_hours;
    case DeviceKind::kMicroChp:
      return (up ? device.current_electric_power_kw : headroom) * dt_hours;
  }
  throw std::logic_error("derive_m: unknown device kind");
}

CaseAction classify_case(RegulationCase reg) {
  if (reg.aggregator == reg.tso) return CaseAction::kOptimize;  // cases 1, 3
  return reg.aggregator == Direction::kUp ? CaseAction::kSellToTso
                                          : CaseAction::kTsoPaysToConsume;
}

Assumption1Result check_assumption1(const MarketInstance& inst) {
  Assumption1Result res;
  for (const Prosumer& pro : inst.prosumers) {
    if (pro.b < 0.0) res.free_flex += -pro.b / pro.a;
  }
  res.holds = !inst.cap_enabled || res.free_flex <= inst.f;
  return res;
}

nlohmann::ordered_json instance_to_json(const MarketInstance& inst) {
  nlohmann::ordered_json j;
  j["p"] = inst.p;
  j["f"] = inst.f;
  j["cap_enabled"] = inst.cap_enabled;
  auto& arr = j["prosumers"] = nlohmann::ordered_json::array();
  for (const Prosumer& pro : inst.prosumers) {
    nlohmann::ordered_json pj;
    pj["a"] = pro.a;
    pj["b"] = pro.b;
    pj["m"] = pro.m;
    arr.push_back(std::move(pj));
  }
  return j;
}

MarketInstance instance_from_json(const nlohmann::json& j) {
  MarketInstance inst;
  inst.p = j.at("p").get<double>();
  inst.f = j.at("f").get<double>();
  inst.cap_enabled = j.value("cap_enabled", true);
  for (const auto& pj : j.at("prosumers")) {
    Prosumer pro;
    pro.a = pj.at("a").get<double>();
    pro.b = pj.at("b").get<double>();
    pro.m = pj.at("m").get<double>();
    inst.prosumers.push_back(pro);
  }
  inst.validate();
  return inst;
}

MarketInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file: " + path);
  nlohmann::json j;
  in >> j;
  return instance_from_json(j);
}

void save_instance(const MarketInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write instance file: " + path);
  out << instance_to_json(inst).dump(2) << '\n';
}

const char* to_string(Direction d) {
  return d == Direction::kUp ? "up" : "down";
}

const char* to_string(CaseAction a) {
  switch (a) {
    case CaseAction::kOptimize:
      return "optimize";
    case CaseAction::kSellToTso:
      return "sell_to_tso";
    case CaseAction::kTsoPaysToConsume:
      return "tso_pays_to_consume";
  }
  return "unknown";
}

}  // namespace flexmarket
