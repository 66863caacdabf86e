#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bnnc/model_ir.hpp"
#include "bnnc/netlist.hpp"

namespace bnnc {

// FIXED bakes weights, thresholds and signs into the logic; VARIABLE exposes
// them as primary inputs (parameter storage itself is not modelled).
enum class LowerMode { Fixed, Variable };

std::string_view to_string(LowerMode m);
LowerMode parse_lower_mode(std::string_view s);

// Little-endian bit bus.
using Bus = std::vector<NodeId>;

// Balanced pairwise reduction in the given operand order: half adders on the
// first level, ripple-carry adders above. The result is exactly
// popcount_width(bits.size()) wide.
Bus build_popcount_tree(NetlistBuilder& b, std::span<const NodeId> bits);

// [value(bus) >= k] against a compile-time constant.
NodeId build_geq_const(NetlistBuilder& b, const Bus& bus, long long k);
// [value(bus) <= k] against a compile-time constant.
NodeId build_leq_const(NetlistBuilder& b, const Bus& bus, long long k);

struct CompareResult {
  NodeId gt = kNoNode;  // a > b
  NodeId eq = kNoNode;  // a == b
};

// MSB-first ripple compare of two buses (the shorter one is zero-extended).
CompareResult build_compare(NetlistBuilder& b, const Bus& a, const Bus& bb);

enum class Direction { Geq, Leq };
NodeId build_comparator(NetlistBuilder& b, const Bus& a, const Bus& bb, Direction dir);

// Programmable threshold unit: cst ? sel : (sel ? phi <= thresh : phi >= thresh).
NodeId build_threshold_unit(NetlistBuilder& b, const Bus& phi, const Bus& thresh, NodeId sel,
                            NodeId cst);

Netlist lower_model(const BnnModel& m, LowerMode mode);

// Primary input names in netlist order: image bits x_<c>_<y>_<x> in frame
// order, then (VARIABLE only) per layer and output map the weights
// w_L<l>_m<m>_<i>, threshold bits t_L<l>_m<m>_<bit> (LSB first), sel_L<l>_m<m>
// and cst_L<l>_m<m>. Layers are numbered from 1.
std::vector<std::string> input_names(const BnnModel& m, LowerMode mode);

// score_<class>_<bit>, LSB first per class.
std::vector<std::string> output_names(const BnnModel& m);

// Values driving the VARIABLE-mode parameter inputs, in input order.
std::vector<std::uint8_t> parameter_values(const BnnModel& m);

// Width of each class score bus.
int score_width(const BnnModel& m);

// Decodes the output bit vector into one integer score per class.
std::vector<int> decode_scores(const BnnModel& m, std::span<const std::uint8_t> outputs);

}  // namespace bnnc
