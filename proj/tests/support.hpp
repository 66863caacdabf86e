#pragma once

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>

#include "bnnc/lowering.hpp"
#include "bnnc/model_ir.hpp"
#include "bnnc/netlist.hpp"

namespace testing {

inline std::filesystem::path source_dir() { return BNNC_SOURCE_DIR; }
inline std::filesystem::path model_path(const std::string& name) {
  return source_dir() / "models" / (name + ".json");
}

inline bnnc::LayerSpec conv(int in, int out, int k = 3, bool pool = true) {
  bnnc::LayerSpec s;
  s.kind = bnnc::LayerKind::BinConv;
  s.kh = s.kw = k;
  s.in_maps = in;
  s.out_maps = out;
  s.pool = pool ? bnnc::Pool::Or2x2 : bnnc::Pool::None;
  return s;
}

inline bnnc::LayerSpec fc(int in, int out, bool binarize) {
  bnnc::LayerSpec s;
  s.kind = bnnc::LayerKind::BinFc;
  s.in_maps = in;
  s.out_maps = out;
  s.binarize_output = binarize;
  return s;
}

// Random weights and random canonical thresholds, including constant neurons.
inline bnnc::BnnModel random_model(const bnnc::Topology& t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  bnnc::BnnModel m{t.name, t.input, {}};
  for (const bnnc::LayerSpec& s : t.layers) {
    bnnc::Layer l{s, {}};
    const int n_rf = s.receptive_field();
    std::uniform_int_distribution<int> th(-1, n_rf + 1);
    for (int o = 0; o < s.out_maps; ++o) {
      bnnc::NeuronParams p;
      for (int i = 0; i < n_rf; ++i) p.weights.push_back(static_cast<std::uint8_t>(rng() & 1));
      const auto r = rng() % 16;
      bnnc::Threshold tr{th(rng), r < 10 ? bnnc::Compare::Geq : r < 14 ? bnnc::Compare::Leq
                                  : r == 14 ? bnnc::Compare::Const0 : bnnc::Compare::Const1};
      tr = bnnc::canonicalize_threshold(tr, n_rf);
      p.thresh = tr.thresh;
      p.sign = tr.sign;
      l.neurons.push_back(std::move(p));
    }
    m.layers.push_back(std::move(l));
  }
  bnnc::validate(m);
  return m;
}

// 4x4x2 input, conv3x3(2,3)+pool, fc(12,3), fc(3,2).
inline bnnc::Topology small_topology() {
  return {"small", {4, 4, 2}, {conv(2, 3), fc(12, 3, true), fc(3, 2, false)}};
}

// Sixteen fixed-weight popcount units over the same eight inputs. The first
// adder level pairs (x0,x1), (x2,x3), ... so every unit sees the same four
// pair groups, each with one of four weight combinations.
inline bnnc::Netlist sharing_construction(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  bnnc::NetlistBuilder b;
  std::vector<bnnc::NodeId> x;
  for (int i = 0; i < 8; ++i) x.push_back(b.add_input("x" + std::to_string(i)));
  for (int u = 0; u < 16; ++u) {
    std::vector<bnnc::NodeId> bits;
    for (int i = 0; i < 8; ++i) bits.push_back(b.xnor2(x[i], b.constant(rng() & 1)));
    const bnnc::Bus sum = bnnc::build_popcount_tree(b, bits);
    for (std::size_t k = 0; k < sum.size(); ++k)
      b.add_output("u" + std::to_string(u) + "_" + std::to_string(k), sum[k]);
  }
  return std::move(b).finish();
}

struct GroupSharing {
  std::size_t sums = 0;    // distinct XOR2/XNOR2 over the pair's literals
  std::size_t carries = 0; // distinct AND2 over the pair's literals
  std::size_t subcircuits() const { return std::max(sums, carries); }
};

// First-level gates of pair group g: two-input gates whose operands are both
// literals (the input or its inverter) of x[2g] and x[2g+1].
inline std::vector<GroupSharing> first_level_sharing(const bnnc::Netlist& n) {
  std::vector<int> literal_of(n.size(), -1);
  for (std::size_t i = 0; i < n.inputs().size(); ++i) literal_of[i] = static_cast<int>(i);
  for (std::size_t id = 0; id < n.size(); ++id) {
    const bnnc::Node& node = n.node(static_cast<bnnc::NodeId>(id));
    if (node.type == bnnc::GateType::Inv && node.ops[0] < n.inputs().size())
      literal_of[id] = static_cast<int>(node.ops[0]);
  }
  std::vector<GroupSharing> groups(n.inputs().size() / 2);
  for (std::size_t id = 0; id < n.size(); ++id) {
    const bnnc::Node& node = n.node(static_cast<bnnc::NodeId>(id));
    const bool sum = node.type == bnnc::GateType::Xor2 || node.type == bnnc::GateType::Xnor2;
    const bool carry = node.type == bnnc::GateType::And2;
    if (!sum && !carry) continue;
    const int a = literal_of[node.ops[0]], c = literal_of[node.ops[1]];
    if (a < 0 || c < 0 || a / 2 != c / 2 || a == c) continue;
    (sum ? groups[a / 2].sums : groups[a / 2].carries)++;
  }
  return groups;
}

}  // namespace testing
