#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bnnc/model_ir.hpp"
#include "bnnc/netlist.hpp"

namespace bnnc {

// Cell areas in um^2. INPUT and CONST nodes carry no area.
struct TechLibrary {
  std::array<std::optional<double>, kGateTypeCount> gate_area{};
  double xnor_area = 0.0;  // analytical model: one XNOR per receptive-field bit
  double ha_area = 0.0;
  double fa_area = 0.0;
  double ge_area = 0.0;    // um^2 per two-input NAND equivalent
  std::optional<double> fo4_delay_ps;

  // GF22 constants (XNOR 0.73, HA 1.06, FA 1.60, 1 GE = 0.199 um^2,
  // FO4 = 22.89 ps) plus derived per-gate defaults; see tech/gf22-defaults.txt.
  static TechLibrary gf22_defaults();

  double area(GateType t) const;  // throws ConfigError when missing
};

// "key value" lines; '#' starts a comment. Keys: gate type names (INV, AND2,
// ...), HA, FA, ge_area, fo4_delay. XNOR2 doubles as the analytical XNOR area.
TechLibrary parse_tech_library(std::string_view text);
TechLibrary load_tech_library(const std::filesystem::path& path);
std::string format_tech_library(const TechLibrary& t);

struct LayerArea {
  long long n_out = 0;
  long long n_rf = 0;
  double xnor_um2 = 0.0;
  double ha_um2 = 0.0;
  double fa_um2 = 0.0;
  double total_um2 = 0.0;

  double total_mm2() const { return total_um2 * 1e-6; }
};

struct AreaEstimate {
  std::vector<LayerArea> layers;
  double total_um2 = 0.0;
  double total_ge = 0.0;

  double total_mm2() const { return total_um2 * 1e-6; }
};

// Adder-tree estimate per output value: N_RF XNORs, N_RF - 1 half adders and
// N_RF - log2(N_RF) - 1 full adders (real-valued log2, clamped at zero).
// `in` is the shape feeding the layer; conv layers use N_out = H * W * OF.
LayerArea estimate_layer_area(const LayerSpec& layer, const Shape& in, const TechLibrary& tech);
AreaEstimate estimate_model_area(const Topology& t, const TechLibrary& tech);
AreaEstimate estimate_model_area(const BnnModel& m, const TechLibrary& tech);

// OF * (N_RF + floor(log2 N_RF) + 3) bits per layer.
std::vector<long long> param_footprint_per_layer(const Topology& t);
long long param_footprint(const Topology& t);
long long param_footprint(const BnnModel& m);

// 1 MAC = 2 Op. conv: 2 * H * W * OF * N_RF, fc: 2 * in * out.
std::vector<long long> op_count_per_layer(const Topology& t);
long long op_count(const Topology& t);
long long op_count(const BnnModel& m);

struct MeasuredArea {
  double um2 = 0.0;
  double ge = 0.0;

  double mm2() const { return um2 * 1e-6; }
};

MeasuredArea measured_area(const GateStats& s, const TechLibrary& tech);
MeasuredArea measured_area(const Netlist& n, const TechLibrary& tech);

// Area per node tag (index = tag); empty if the netlist carries no tags.
std::vector<MeasuredArea> measured_area_by_tag(const Netlist& n, const TechLibrary& tech);

double ge_per_op(const MeasuredArea& a, long long ops);

// Table I topologies plus a 64x64 extrapolation (5 conv + 2 fc layers
// continuing the same channel progression). The 64x64 network is a plausible
// reading only; it exists for the scaling report.
Topology reference_topology(std::string_view name);  // "bnn16", "bnn32", "bnn64"

}  // namespace bnnc
