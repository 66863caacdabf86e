#include "bnnc/costmodel.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "bnnc/error.hpp"

namespace bnnc {

namespace {

double parse_positive(std::string_view tok, std::size_t lineno) {
  std::string s(tok);
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v) || v <= 0.0)
    throw ConfigError("line " + std::to_string(lineno) + ": expected a positive number, got \"" + s + "\"");
  return v;
}

// Shape entering each layer.
std::vector<Shape> input_shapes(const Topology& t) {
  std::vector<Shape> in{t.input};
  auto out = layer_shapes(t);
  in.insert(in.end(), out.begin(), out.end() - 1);
  return in;
}

}  // namespace

TechLibrary TechLibrary::gf22_defaults() {
  TechLibrary t;
  t.xnor_area = 0.73;
  t.ha_area = 1.06;
  t.fa_area = 1.60;
  t.ge_area = 0.199;
  t.fo4_delay_ps = 22.89;
  auto set = [&](GateType g, double a) { t.gate_area[static_cast<std::size_t>(g)] = a; };
  set(GateType::Xnor2, 0.73);
  set(GateType::Xor2, 0.73);         // same cell class as XNOR2
  set(GateType::And2, 1.06 - 0.73);  // HA = XOR2 + AND2
  set(GateType::Or2, 1.06 - 0.73);   // sized like AND2
  set(GateType::Inv, 0.15);          // ~0.75 GE
  set(GateType::Mux2, 0.73);         // sized like XOR2
  return t;
}

double TechLibrary::area(GateType t) const {
  if (t == GateType::Input || t == GateType::Const0 || t == GateType::Const1) return 0.0;
  const auto& a = gate_area[static_cast<std::size_t>(t)];
  if (!a) throw ConfigError("gate type " + std::string(to_string(t)) + " is missing from the tech library");
  return *a;
}

TechLibrary parse_tech_library(std::string_view text) {
  TechLibrary t;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  bool have_ha = false, have_fa = false, have_ge = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key, value, extra;
    if (!(ls >> key)) continue;
    if (!(ls >> value) || (ls >> extra))
      throw ConfigError("line " + std::to_string(lineno) + ": expected \"<key> <value>\"");
    if (key == "ge_area") {
      t.ge_area = parse_positive(value, lineno);
      have_ge = true;
    } else if (key == "fo4_delay") {
      t.fo4_delay_ps = parse_positive(value, lineno);
    } else if (key == "HA") {
      t.ha_area = parse_positive(value, lineno);
      have_ha = true;
    } else if (key == "FA") {
      t.fa_area = parse_positive(value, lineno);
      have_fa = true;
    } else {
      GateType g;
      try {
        g = parse_gate_type(key);
      } catch (const Error&) {
        throw ConfigError("line " + std::to_string(lineno) + ": unknown key \"" + key + "\"");
      }
      if (g == GateType::Input || g == GateType::Const0 || g == GateType::Const1)
        throw ConfigError("line " + std::to_string(lineno) + ": " + key + " has no area");
      t.gate_area[static_cast<std::size_t>(g)] = parse_positive(value, lineno);
    }
  }
  const auto& xnor = t.gate_area[static_cast<std::size_t>(GateType::Xnor2)];
  if (!xnor || !have_ha || !have_fa || !have_ge)
    throw ConfigError("tech library needs XNOR2, HA, FA and ge_area entries");
  t.xnor_area = *xnor;
  return t;
}

TechLibrary load_tech_library(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open tech library " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_tech_library(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string format_tech_library(const TechLibrary& t) {
  std::ostringstream os;
  os << std::setprecision(6);
  os << "ge_area " << t.ge_area << "\n";
  if (t.fo4_delay_ps) os << "fo4_delay " << *t.fo4_delay_ps << "\n";
  os << "HA " << t.ha_area << "\n" << "FA " << t.fa_area << "\n";
  for (std::size_t i = 0; i < kGateTypeCount; ++i)
    if (t.gate_area[i]) os << to_string(static_cast<GateType>(i)) << " " << *t.gate_area[i] << "\n";
  return os.str();
}

LayerArea estimate_layer_area(const LayerSpec& layer, const Shape& in, const TechLibrary& tech) {
  LayerArea a;
  a.n_rf = layer.receptive_field();
  a.n_out = layer.kind == LayerKind::BinConv
                ? static_cast<long long>(in.height) * in.width * layer.out_maps
                : layer.out_maps;
  const double n_out = static_cast<double>(a.n_out);
  const double n_rf = static_cast<double>(a.n_rf);
  a.xnor_um2 = n_out * n_rf * tech.xnor_area;
  a.ha_um2 = n_out * std::max(0.0, n_rf - 1.0) * tech.ha_area;
  a.fa_um2 = n_out * std::max(0.0, n_rf - std::log2(n_rf) - 1.0) * tech.fa_area;
  a.total_um2 = a.xnor_um2 + a.ha_um2 + a.fa_um2;
  return a;
}

AreaEstimate estimate_model_area(const Topology& t, const TechLibrary& tech) {
  validate(t);
  AreaEstimate e;
  const auto in = input_shapes(t);
  for (std::size_t i = 0; i < t.layers.size(); ++i) {
    e.layers.push_back(estimate_layer_area(t.layers[i], in[i], tech));
    e.total_um2 += e.layers.back().total_um2;
  }
  e.total_ge = e.total_um2 / tech.ge_area;
  return e;
}

AreaEstimate estimate_model_area(const BnnModel& m, const TechLibrary& tech) {
  return estimate_model_area(topology_of(m), tech);
}

std::vector<long long> param_footprint_per_layer(const Topology& t) {
  std::vector<long long> bits;
  for (const LayerSpec& l : t.layers) {
    const long long n_rf = l.receptive_field();
    bits.push_back(static_cast<long long>(l.out_maps) * (n_rf + (popcount_width(static_cast<int>(n_rf)) - 1) + 3));
  }
  return bits;
}

long long param_footprint(const Topology& t) {
  long long total = 0;
  for (long long b : param_footprint_per_layer(t)) total += b;
  return total;
}

long long param_footprint(const BnnModel& m) { return param_footprint(topology_of(m)); }

std::vector<long long> op_count_per_layer(const Topology& t) {
  std::vector<long long> ops;
  const auto in = input_shapes(t);
  for (std::size_t i = 0; i < t.layers.size(); ++i) {
    const LayerSpec& l = t.layers[i];
    if (l.kind == LayerKind::BinConv)
      ops.push_back(2LL * in[i].height * in[i].width * l.out_maps * l.receptive_field());
    else
      ops.push_back(2LL * l.in_maps * l.out_maps);
  }
  return ops;
}

long long op_count(const Topology& t) {
  long long total = 0;
  for (long long o : op_count_per_layer(t)) total += o;
  return total;
}

long long op_count(const BnnModel& m) { return op_count(topology_of(m)); }

MeasuredArea measured_area(const GateStats& s, const TechLibrary& tech) {
  MeasuredArea a;
  for (std::size_t i = 0; i < kGateTypeCount; ++i)
    if (s.count[i] > 0) a.um2 += static_cast<double>(s.count[i]) * tech.area(static_cast<GateType>(i));
  a.ge = a.um2 / tech.ge_area;
  return a;
}

MeasuredArea measured_area(const Netlist& n, const TechLibrary& tech) { return measured_area(stats(n), tech); }

std::vector<MeasuredArea> measured_area_by_tag(const Netlist& n, const TechLibrary& tech) {
  std::vector<MeasuredArea> out;
  if (!n.has_tags()) return out;
  for (std::size_t id = 0; id < n.size(); ++id) {
    const std::uint16_t tag = n.tags()[id];
    if (out.size() <= tag) out.resize(tag + 1u);
    out[tag].um2 += tech.area(n.node(static_cast<NodeId>(id)).type);
  }
  for (auto& a : out) a.ge = a.um2 / tech.ge_area;
  return out;
}

double ge_per_op(const MeasuredArea& a, long long ops) {
  return ops > 0 ? a.ge / static_cast<double>(ops) : 0.0;
}

Topology reference_topology(std::string_view name) {
  auto conv = [](int in, int out) {
    LayerSpec s;
    s.kind = LayerKind::BinConv;
    s.kh = s.kw = 3;
    s.in_maps = in;
    s.out_maps = out;
    s.pool = Pool::Or2x2;
    return s;
  };
  auto fc = [](int in, int out, bool binarize) {
    LayerSpec s;
    s.kind = LayerKind::BinFc;
    s.in_maps = in;
    s.out_maps = out;
    s.binarize_output = binarize;
    return s;
  };
  if (name == "bnn16")
    return {"bnn16", {16, 16, 1}, {conv(1, 16), conv(16, 32), conv(32, 48), fc(192, 64, true), fc(64, 4, false)}};
  if (name == "bnn32")
    return {"bnn32", {32, 32, 1},
            {conv(1, 16), conv(16, 32), conv(32, 48), conv(48, 64), fc(256, 64, true), fc(64, 4, false)}};
  if (name == "bnn64")
    return {"bnn64", {64, 64, 1},
            {conv(1, 16), conv(16, 32), conv(32, 48), conv(48, 64), conv(64, 64), fc(256, 64, true),
             fc(64, 4, false)}};
  throw ConfigError("unknown reference topology \"" + std::string(name) + "\"");
}

}  // namespace bnnc
