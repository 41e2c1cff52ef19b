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

#include "flexmarket/mpec_mip.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "flexmarket/errors.hpp"

namespace flexmarket {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

KktSystem build_kkt_system(const MarketInstance& inst) {
  KktSystem sys;
  const std::size_t n = inst.size();
  sys.a.resize(n);
  sys.b.resize(n);
  sys.m.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sys.a[i] = inst.prosumers[i].a;
    sys.b[i] = inst.prosumers[i].b;
    sys.m[i] = inst.prosumers[i].m;
  }
  sys.p = inst.p;
  sys.f = inst.f;
  sys.cap_enabled = inst.cap_enabled;
  return sys;
}

KktResiduals evaluate_kkt(const KktSystem& sys, const KktPoint& point) {
  KktResiduals res;
  const std::size_t n = sys.size();
  if (point.x.size() != n || point.y.size() != n ||
      point.lambda1.size() != n || point.lambda2.size() != n) {
    res.primal = res.max_residual = kInf;
    return res;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = point.x[i], y = point.y[i];
    const double l1 = point.lambda1[i], l2 = point.lambda2[i];
    res.stationarity = std::max(
        res.stationarity, std::abs(x - sys.a[i] * y - sys.b[i] + l1 - l2));
    res.complementarity =
        std::max({res.complementarity, std::abs(y * l1),
                  std::abs((sys.m[i] - y) * l2)});
    res.primal = std::max({res.primal, -y, y - sys.m[i], -x});
    res.dual = std::max({res.dual, -l1, -l2});
    total += y;
  }
  if (sys.cap_enabled) {
    res.primal = std::max(res.primal, total - sys.f);
  }
  res.primal = std::max(res.primal, 0.0);
  res.dual = std::max(res.dual, 0.0);
  res.max_residual = std::max(
      {res.stationarity, res.complementarity, res.primal, res.dual});
  return res;
}

KktPoint extend_with_duals(const Allocation& alloc,
                           const MarketInstance& inst) {
  KktPoint point;
  point.x = alloc.x;
  point.y = alloc.y;
  const std::size_t n = inst.size();
  point.lambda1.resize(n);
  point.lambda2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Prosumer& pro = inst.prosumers[i];
    const double slack = point.x[i] - pro.a * point.y[i] - pro.b;
    point.lambda1[i] = std::max(0.0, -slack);
    point.lambda2[i] = std::max(0.0, slack);
  }
  return point;
}

double choose_big_m(const MarketInstance& inst) {
  double inner = inst.f;
  for (const Prosumer& pro : inst.prosumers) {
    inner = std::max(inner, pro.m);
    inner = std::max(inner, pro.a * pro.m + std::abs(pro.b) + inst.p);
  }
  inner = std::max(inner, inst.p);
  return 10.0 * inner;
}

MipModel build_big_m_mip(const MarketInstance& inst, double big_m) {
  if (!(big_m > 0.0)) {
    throw std::invalid_argument("build_big_m_mip: M must be positive");
  }
  const int n = static_cast<int>(inst.size());
  MipModel model;
  model.n = n;
  model.big_m = big_m;

  auto idx = [n](int block, int i) { return block * n + i; };
  model.vars.resize(5 * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Prosumer& pro = inst.prosumers[i];
    const std::string tag = std::to_string(i + 1);
    model.vars[idx(0, i)] = {"y" + tag, 0.0, pro.m, false};
    model.vars[idx(1, i)] = {"l1_" + tag, 0.0, kInf, false};
    model.vars[idx(2, i)] = {"l2_" + tag, 0.0, kInf, false};
    model.vars[idx(3, i)] = {"z" + tag, 0.0, 1.0, true};
    model.vars[idx(4, i)] = {"w" + tag, 0.0, 1.0, true};
  }

  model.obj_linear.assign(model.vars.size(), 0.0);
  model.obj_quad_diag.assign(model.vars.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    const Prosumer& pro = inst.prosumers[i];
    model.obj_linear[idx(0, i)] = pro.b - inst.p;
    model.obj_linear[idx(2, i)] = pro.m;
    model.obj_quad_diag[idx(0, i)] = pro.a;
  }
  model.obj_constant = inst.p * inst.f;

  for (int i = 0; i < n; ++i) {
    const Prosumer& pro = inst.prosumers[i];
    const std::string tag = std::to_string(i + 1);
    model.rows.push_back({"stat" + tag,
                          {{idx(0, i), pro.a}, {idx(1, i), -1.0},
                           {idx(2, i), 1.0}},
                          RowSense::kGe,
                          -pro.b});
    model.rows.push_back({"ylim" + tag,
                          {{idx(0, i), 1.0}, {idx(3, i), -big_m}},
                          RowSense::kLe,
                          0.0});
    model.rows.push_back({"mylim" + tag,
                          {{idx(0, i), -1.0}, {idx(4, i), -big_m}},
                          RowSense::kLe,
                          -pro.m});
    model.rows.push_back({"l1lim" + tag,
                          {{idx(1, i), 1.0}, {idx(3, i), big_m}},
                          RowSense::kLe,
                          big_m});
    model.rows.push_back({"l2lim" + tag,
                          {{idx(2, i), 1.0}, {idx(4, i), big_m}},
                          RowSense::kLe,
                          big_m});
  }
  if (inst.cap_enabled) {
    MipRow cap;
    cap.name = "cap";
    for (int i = 0; i < n; ++i) cap.terms.push_back({idx(0, i), 1.0});
    cap.sense = RowSense::kLe;
    cap.rhs = inst.f;
    model.rows.push_back(std::move(cap));
  }
  return model;
}

// ---------------------------------------------------------------------------
// LP text format

namespace {

void append_term(std::string& out, double coeff, const std::string& name) {
  out += coeff < 0.0 ? " - " : " + ";
  out += format_double(std::abs(coeff));
  out += ' ';
  out += name;
}

const char* sense_token(RowSense s) {
  switch (s) {
    case RowSense::kLe:
      return "<=";
    case RowSense::kGe:
      return ">=";
    case RowSense::kEq:
      return "=";
  }
  return "=";
}

}  // namespace

std::string export_lp(const MipModel& model) {
  std::string out;
  out += "\\ flexmarket mip model\n";
  out += "\\ M = " + format_double(model.big_m) + "\n";
  out += "\\ n = " + std::to_string(model.n) + "\n";
  out += "Minimize\n obj:";
  for (std::size_t v = 0; v < model.vars.size(); ++v) {
    if (model.obj_linear[v] != 0.0) {
      append_term(out, model.obj_linear[v], model.vars[v].name);
    }
  }
  if (model.obj_constant != 0.0) {
    out += model.obj_constant < 0.0 ? " - " : " + ";
    out += format_double(std::abs(model.obj_constant));
  }
  bool any_quad = false;
  for (std::size_t v = 0; v < model.vars.size(); ++v) {
    if (model.obj_quad_diag[v] != 0.0) {
      out += any_quad ? "" : " + [";
      any_quad = true;
      append_term(out, 2.0 * model.obj_quad_diag[v],
                  model.vars[v].name + " ^2");
    }
  }
  if (any_quad) out += " ] / 2";
  out += "\nSubject To\n";
  for (const MipRow& row : model.rows) {
    out += ' ';
    out += row.name;
    out += ':';
    for (const auto& [v, coeff] : row.terms) {
      append_term(out, coeff, model.vars[v].name);
    }
    out += ' ';
    out += sense_token(row.sense);
    out += ' ';
    out += format_double(row.rhs);
    out += '\n';
  }
  out += "Bounds\n";
  for (const MipVariable& var : model.vars) {
    if (var.is_binary) continue;
    if (var.ub != kInf) {
      out += ' ' + format_double(var.lb) + " <= " + var.name +
             " <= " + format_double(var.ub) + '\n';
    }
  }
  out += "Binaries\n";
  for (const MipVariable& var : model.vars) {
    if (var.is_binary) out += ' ' + var.name + '\n';
  }
  out += "End\n";
  return out;
}

void export_lp_file(const MipModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write LP file: " + path);
  out << export_lp(model);
}

namespace {

double parse_number(const std::string& tok) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw std::runtime_error("LP parse: bad number '" + tok + "'");
  }
  return v;
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream in(line);
  std::string t;
  while (in >> t) toks.push_back(t);
  return toks;
}

}  // namespace

MipModel parse_lp(const std::string& text) {
  MipModel model;
  model.n = -1;
  double big_m = 0.0;

  std::vector<std::string> lines;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }

  // Header comments carry M and n; the variable layout is canonical, so
  // the full variable list can be rebuilt before reading any section.
  for (const std::string& line : lines) {
    if (line.rfind("\\ M = ", 0) == 0) big_m = parse_number(line.substr(6));
    if (line.rfind("\\ n = ", 0) == 0) {
      model.n = static_cast<int>(parse_number(line.substr(6)));
    }
  }
  if (model.n < 0) throw std::runtime_error("LP parse: missing n header");
  model.big_m = big_m;

  const int n = model.n;
  model.vars.resize(5 * static_cast<std::size_t>(n));
  std::unordered_map<std::string, int> var_index;
  for (int i = 0; i < n; ++i) {
    const std::string tag = std::to_string(i + 1);
    model.vars[i] = {"y" + tag, 0.0, kInf, false};
    model.vars[n + i] = {"l1_" + tag, 0.0, kInf, false};
    model.vars[2 * n + i] = {"l2_" + tag, 0.0, kInf, false};
    model.vars[3 * n + i] = {"z" + tag, 0.0, kInf, false};
    model.vars[4 * n + i] = {"w" + tag, 0.0, kInf, false};
  }
  for (std::size_t v = 0; v < model.vars.size(); ++v) {
    var_index[model.vars[v].name] = static_cast<int>(v);
  }
  auto lookup = [&](const std::string& name) {
    auto it = var_index.find(name);
    if (it == var_index.end()) {
      throw std::runtime_error("LP parse: unknown variable '" + name + "'");
    }
    return it->second;
  };

  model.obj_linear.assign(model.vars.size(), 0.0);
  model.obj_quad_diag.assign(model.vars.size(), 0.0);

  enum class Section { kNone, kObjective, kRows, kBounds, kBinaries, kEnd };
  Section section = Section::kNone;

  for (const std::string& line : lines) {
    if (line.empty() || line[0] == '\\') continue;
    if (line == "Minimize") {
      section = Section::kObjective;
      continue;
    }
    if (line == "Subject To") {
      section = Section::kRows;
      continue;
    }
    if (line == "Bounds") {
      section = Section::kBounds;
      continue;
    }
    if (line == "Binaries") {
      section = Section::kBinaries;
      continue;
    }
    if (line == "End") {
      section = Section::kEnd;
      continue;
    }

    std::vector<std::string> toks = tokenize(line);
    if (toks.empty()) continue;

    switch (section) {
      case Section::kObjective: {
        // " obj: - 8 y1 + 300 + [ 2 y1 ^2 ] / 2"
        if (toks[0] != "obj:") {
          throw std::runtime_error("LP parse: expected obj:");
        }
        bool in_quad = false;
        for (std::size_t k = 1; k < toks.size();) {
          if (toks[k] == "[") {
            in_quad = true;
            ++k;
            continue;
          }
          if (toks[k] == "]") {
            if (k + 2 > toks.size() || toks[k + 1] != "/" ||
                toks[k + 2] != "2") {
              throw std::runtime_error("LP parse: bad quadratic bracket");
            }
            in_quad = false;
            k += 3;
            continue;
          }
          double sign = 1.0;
          if (toks[k] == "+" || toks[k] == "-") {
            sign = toks[k] == "-" ? -1.0 : 1.0;
            ++k;
          }
          if (k < toks.size() && toks[k] == "[") {
            in_quad = true;  // the sign belongs to the bracket
            ++k;
            continue;
          }
          if (k >= toks.size()) {
            throw std::runtime_error("LP parse: dangling sign");
          }
          const double mag = parse_number(toks[k]);
          ++k;
          const bool has_name =
              k < toks.size() && toks[k] != "+" && toks[k] != "-" &&
              toks[k] != "[" && toks[k] != "]";
          if (in_quad) {
            if (!has_name || k + 1 >= toks.size() || toks[k + 1] != "^2") {
              throw std::runtime_error("LP parse: bad quadratic term");
            }
            model.obj_quad_diag[lookup(toks[k])] = sign * mag / 2.0;
            k += 2;
          } else if (has_name) {
            model.obj_linear[lookup(toks[k])] = sign * mag;
            ++k;
          } else {
            model.obj_constant += sign * mag;
          }
        }
        break;
      }
      case Section::kRows: {
        if (toks[0].back() != ':') {
          throw std::runtime_error("LP parse: row without name");
        }
        MipRow row;
        row.name = toks[0].substr(0, toks[0].size() - 1);
        std::size_t k = 1;
        while (k < toks.size() && toks[k] != "<=" && toks[k] != ">=" &&
               toks[k] != "=") {
          double sign = 1.0;
          if (toks[k] == "+" || toks[k] == "-") {
            sign = toks[k] == "-" ? -1.0 : 1.0;
            ++k;
          }
          if (k + 1 >= toks.size()) {
            throw std::runtime_error("LP parse: truncated row");
          }
          const double mag = parse_number(toks[k]);
          row.terms.push_back({lookup(toks[k + 1]), sign * mag});
          k += 2;
        }
        if (k >= toks.size()) {
          throw std::runtime_error("LP parse: row missing sense");
        }
        row.sense = toks[k] == "<="   ? RowSense::kLe
                    : toks[k] == ">=" ? RowSense::kGe
                                      : RowSense::kEq;
        if (k + 1 >= toks.size()) {
          throw std::runtime_error("LP parse: row missing rhs");
        }
        row.rhs = parse_number(toks[k + 1]);
        model.rows.push_back(std::move(row));
        break;
      }
      case Section::kBounds: {
        // " 0 <= y1 <= 6"
        if (toks.size() != 5 || toks[1] != "<=" || toks[3] != "<=") {
          throw std::runtime_error("LP parse: bad bounds line");
        }
        MipVariable& var = model.vars[lookup(toks[2])];
        var.lb = parse_number(toks[0]);
        var.ub = parse_number(toks[4]);
        break;
      }
      case Section::kBinaries: {
        for (const std::string& name : toks) {
          MipVariable& var = model.vars[lookup(name)];
          var.is_binary = true;
          var.lb = 0.0;
          var.ub = 1.0;
        }
        break;
      }
      case Section::kNone:
      case Section::kEnd:
        throw std::runtime_error("LP parse: content outside any section");
    }
  }
  return model;
}

MipModel parse_lp_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open LP file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_lp(buf.str());
}

// ---------------------------------------------------------------------------
// Branch-and-bound

namespace {

struct MipStructure {
  int n = 0;
  double big_m = 0.0;
  double p = 0.0;
  double f = 0.0;
  bool has_cap = false;
  double constant = 0.0;
  std::vector<double> a, b, m;
};

MipStructure extract_structure(const MipModel& model) {
  MipStructure s;
  s.n = model.n;
  s.big_m = model.big_m;
  s.constant = model.obj_constant;
  s.a.resize(s.n);
  s.b.resize(s.n);
  s.m.resize(s.n);
  for (int i = 0; i < s.n; ++i) {
    s.a[i] = model.obj_quad_diag[model.y_index(i)];
    s.m[i] = model.vars[model.y_index(i)].ub;
    if (!(s.a[i] > 0.0)) {
      throw std::invalid_argument("solve_mip_bb: nonpositive curvature");
    }
  }
  for (const MipRow& row : model.rows) {
    if (row.name.rfind("stat", 0) == 0) {
      const int i = std::stoi(row.name.substr(4)) - 1;
      s.b[i] = -row.rhs;
    } else if (row.name == "cap") {
      s.has_cap = true;
      s.f = row.rhs;
    }
  }
  if (s.n > 0) s.p = s.b[0] - model.obj_linear[model.y_index(0)];
  return s;
}

enum class Fix : std::uint8_t { kFree, k0, k1 };

// Feasible y-interval and forced lambda2 cost for one coordinate under a
// partial (z, w) fixing. `exact` means the interval and cost describe the
// coordinate's completions precisely, not just a relaxation.
struct CoordRelax {
  bool feasible = true;
  double lo = 0.0;
  double hi = 0.0;
  double cost = 0.0;
  bool exact = true;
};

CoordRelax coord_relax(const MipStructure& s, int i, Fix z, Fix w) {
  const double a = s.a[i], b = s.b[i], m = s.m[i], M = s.big_m;
  CoordRelax r;
  if (z == Fix::k0) {
    // y pinned to zero; w only decides which side carries the slack.
    const bool w1_ok = m <= M && b >= 0.0;
    const bool w0_ok = m == 0.0 && b >= -M;
    r.feasible = w == Fix::k1 ? w1_ok : w == Fix::k0 ? w0_ok : (w1_ok || w0_ok);
    r.lo = r.hi = 0.0;
    return r;
  }
  if (w == Fix::k0) {
    // y pinned to m (z free resolves to 1 whenever m > 0).
    r.feasible = m <= M && std::max(0.0, -(a * m + b)) <= M;
    r.lo = r.hi = m;
    r.cost = m * std::max(0.0, -(a * m + b));
    return r;
  }
  if (z == Fix::k1 && w == Fix::k1) {
    // lambda forced to zero; the x >= 0 row becomes y >= -b/a.
    r.lo = std::max({0.0, b < 0.0 ? -b / a : 0.0, m - M});
    r.hi = std::min(m, M);
    r.feasible = r.lo <= r.hi;
    return r;
  }
  // At least one binary still free: relax to the union of completions.
  r.lo = std::max(0.0, m - M);
  if (w == Fix::k1 && b < 0.0) {
    // w = 1 rules the y = m branch out only through lambda2 = 0; with
    // b < 0 the z = 0 branch is infeasible too, so y >= -b/a is valid.
    r.lo = std::max(r.lo, -b / a);
  }
  r.hi = std::min(m, M);
  r.feasible = r.lo <= r.hi;
  r.exact = false;
  return r;
}

struct NodeEval {
  bool feasible = false;
  bool exact = false;
  double objective = 0.0;  // lower bound; exact value when `exact`
  std::vector<double> y;   // populated when exact
};

NodeEval evaluate_node(const MipStructure& s, const std::vector<Fix>& z,
                       const std::vector<Fix>& w) {
  NodeEval ev;
  ReducedQp qp;
  qp.cap = s.f;
  qp.cap_enabled = s.has_cap;
  double forced_cost = 0.0;
  bool exact = true;
  for (int i = 0; i < s.n; ++i) {
    const CoordRelax r = coord_relax(s, i, z[i], w[i]);
    if (!r.feasible) return ev;
    qp.quad.push_back(s.a[i]);
    qp.lin.push_back(s.b[i] - s.p);
    qp.lower.push_back(r.lo);
    qp.upper.push_back(r.hi);
    forced_cost += r.cost;
    exact = exact && r.exact;
  }
  QpSolution qs;
  try {
    qs = solve_capped_separable_qp(qp);
  } catch (const InfeasibleCapError&) {
    return ev;
  }
  double obj = forced_cost + s.constant;
  for (int i = 0; i < s.n; ++i) {
    obj += s.a[i] * qs.y[i] * qs.y[i] + (s.b[i] - s.p) * qs.y[i];
  }
  ev.feasible = true;
  ev.exact = exact;
  ev.objective = obj;
  if (exact) ev.y = std::move(qs.y);
  return ev;
}

}  // namespace

BbResult solve_mip_bb(const MipModel& model, const BbLimits& limits) {
  const MipStructure s = extract_structure(model);
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration<double>(limits.time_limit_s);

  BbResult result;
  result.status = BbStatus::kInfeasible;

  struct Node {
    std::vector<Fix> z, w;
    double bound = 0.0;
    bool exact = false;
    std::vector<double> y;
    int next_pos = 0;  // 2i -> z_i, 2i+1 -> w_i
  };

  auto record_incumbent = [&](const Node& node) {
    if (result.has_incumbent && node.bound >= result.objective) return;
    result.has_incumbent = true;
    result.objective = node.bound;
    result.y = node.y;
    result.z.assign(s.n, 0);
    result.w.assign(s.n, 0);
    result.lambda1.assign(s.n, 0.0);
    result.lambda2.assign(s.n, 0.0);
    for (int i = 0; i < s.n; ++i) {
      const Fix z = node.z[i], w = node.w[i];
      if (z == Fix::k0) {
        result.z[i] = 0;
        result.w[i] = (s.m[i] == 0.0 && s.b[i] < 0.0) ? 0 : 1;
        if (result.w[i] == 0) result.lambda2[i] = std::max(0.0, -s.b[i]);
      } else if (w == Fix::k0) {
        result.z[i] = s.m[i] > 0.0 ? 1 : (z == Fix::k1 ? 1 : 0);
        result.w[i] = 0;
        result.lambda2[i] = std::max(0.0, -(s.a[i] * s.m[i] + s.b[i]));
      } else {
        result.z[i] = 1;
        result.w[i] = 1;
      }
    }
  };

  Node root;
  root.z.assign(s.n, Fix::kFree);
  root.w.assign(s.n, Fix::kFree);
  NodeEval root_eval = evaluate_node(s, root.z, root.w);
  result.nodes = 1;
  if (!root_eval.feasible) return result;
  root.bound = root_eval.objective;
  root.exact = root_eval.exact;
  root.y = std::move(root_eval.y);

  // Cheap starting incumbent: buy nothing beyond the zero-price
  // flexibility. Shares no information with the search below.
  {
    Node start;
    start.z.resize(s.n);
    start.w.resize(s.n);
    for (int i = 0; i < s.n; ++i) {
      start.z[i] = s.b[i] < 0.0 ? Fix::k1 : Fix::k0;
      start.w[i] = Fix::k1;
    }
    NodeEval ev = evaluate_node(s, start.z, start.w);
    if (ev.feasible && ev.exact) {
      start.bound = ev.objective;
      start.y = std::move(ev.y);
      record_incumbent(start);
    }
  }

  std::vector<Node> stack;
  stack.push_back(std::move(root));
  bool hit_node_limit = false;
  bool hit_time_limit = false;

  while (!stack.empty()) {
    if (result.nodes >= limits.max_nodes) {
      hit_node_limit = true;
      break;
    }
    if (std::chrono::steady_clock::now() > deadline) {
      hit_time_limit = true;
      break;
    }
    Node node = std::move(stack.back());
    stack.pop_back();
    if (result.has_incumbent && node.bound >= result.objective) continue;
    if (node.exact) {
      record_incumbent(node);
      continue;
    }

    // Next undecided position: z_i first, then w_i, in index order. A
    // coordinate with z = 0 is already decided, so its w is skipped.
    int pos = node.next_pos;
    while (pos < 2 * s.n) {
      const int i = pos / 2;
      if (pos % 2 == 0) {
        if (node.z[i] == Fix::kFree) break;
      } else {
        if (node.z[i] != Fix::k0 && node.w[i] == Fix::kFree) break;
      }
      ++pos;
    }
    if (pos >= 2 * s.n) {
      // Every position decided but some coordinate reported inexact:
      // cannot happen, guarded for safety.
      continue;
    }

    Node children[2];
    bool child_ok[2] = {false, false};
    for (int v = 0; v < 2; ++v) {
      if (result.nodes >= limits.max_nodes) {
        hit_node_limit = true;
        break;
      }
      Node child;
      child.z = node.z;
      child.w = node.w;
      child.next_pos = pos;
      const int i = pos / 2;
      Fix& slot = pos % 2 == 0 ? child.z[i] : child.w[i];
      slot = v == 0 ? Fix::k0 : Fix::k1;
      ++result.nodes;
      NodeEval ev = evaluate_node(s, child.z, child.w);
      if (!ev.feasible) continue;
      if (result.has_incumbent && ev.objective >= result.objective) continue;
      child.bound = ev.objective;
      child.exact = ev.exact;
      child.y = std::move(ev.y);
      children[v] = std::move(child);
      child_ok[v] = true;
    }
    if (hit_node_limit) break;

    // Depth-first, better bound explored first (pushed last); ties take
    // the 0-branch first.
    if (child_ok[0] && child_ok[1]) {
      if (children[0].bound <= children[1].bound) {
        stack.push_back(std::move(children[1]));
        stack.push_back(std::move(children[0]));
      } else {
        stack.push_back(std::move(children[0]));
        stack.push_back(std::move(children[1]));
      }
    } else if (child_ok[0]) {
      stack.push_back(std::move(children[0]));
    } else if (child_ok[1]) {
      stack.push_back(std::move(children[1]));
    }
  }

  if (hit_node_limit) {
    result.status = BbStatus::kNodeLimit;
  } else if (hit_time_limit) {
    result.status = BbStatus::kTimeLimit;
  } else if (result.has_incumbent) {
    result.status = BbStatus::kOptimal;
  } else {
    result.status = BbStatus::kInfeasible;
  }
  return result;
}

const char* to_string(BbStatus s) {
  switch (s) {
    case BbStatus::kOptimal:
      return "optimal";
    case BbStatus::kInfeasible:
      return "infeasible";
    case BbStatus::kNodeLimit:
      return "node_limit";
    case BbStatus::kTimeLimit:
      return "time_limit";
  }
  return "unknown";
}

}  // namespace flexmarket
