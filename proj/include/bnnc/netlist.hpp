#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bnnc {

enum class GateType : std::uint8_t { Const0, Const1, Input, Inv, And2, Or2, Xor2, Xnor2, Mux2 };

inline constexpr std::size_t kGateTypeCount = 9;

std::string_view to_string(GateType t);
GateType parse_gate_type(std::string_view s);
int arity(GateType t);
bool is_commutative(GateType t);

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

// MUX2 operands are (select, then, else): out = select ? then : else.
struct Node {
  GateType type = GateType::Const0;
  std::array<NodeId, 3> ops{kNoNode, kNoNode, kNoNode};

  std::span<const NodeId> operands() const {
    return {ops.data(), static_cast<std::size_t>(arity(type))};
  }
  friend bool operator==(const Node&, const Node&) = default;
};

struct Port {
  std::string name;
  NodeId id = kNoNode;
  friend bool operator==(const Port&, const Port&) = default;
};

// Finished combinational DAG. Primary inputs occupy ids [0, inputs().size())
// in declaration order; every gate's operands have smaller ids than the gate.
class Netlist {
 public:
  Netlist() = default;

  // Validates the invariants above. `tags` is either empty or one per node.
  Netlist(std::vector<Node> nodes, std::vector<Port> inputs, std::vector<Port> outputs,
          std::vector<std::uint16_t> tags = {});

  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(NodeId id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Port>& inputs() const { return inputs_; }
  const std::vector<Port>& outputs() const { return outputs_; }

  // Optional origin tag per node (lowering uses the 1-based layer index,
  // 0 for primary inputs and constants). Not serialized.
  const std::vector<std::uint16_t>& tags() const { return tags_; }
  bool has_tags() const { return !tags_.empty(); }

  // Structural equality; tags are ignored.
  friend bool operator==(const Netlist& a, const Netlist& b) {
    return a.nodes_ == b.nodes_ && a.inputs_ == b.inputs_ && a.outputs_ == b.outputs_;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<Port> inputs_;
  std::vector<Port> outputs_;
  std::vector<std::uint16_t> tags_;
};

struct BuildOptions {
  bool fold = true;  // Boolean identities at construction time
  bool hash = true;  // structural hashing (hash-consing)
};

// Append-only single-writer builder.
class NetlistBuilder {
 public:
  explicit NetlistBuilder(BuildOptions opts = {});

  NodeId add_input(std::string name);
  NodeId constant(bool value);

  // Canonicalizes commutative operands, applies local simplifications and
  // returns an existing node when an identical one is already present.
  NodeId add_gate(GateType t, std::span<const NodeId> operands);
  NodeId add_gate(GateType t, std::initializer_list<NodeId> operands) {
    return add_gate(t, std::span<const NodeId>(operands.begin(), operands.size()));
  }

  // Appends exactly the requested gate: no canonical ordering, folding or
  // hash lookup. Used by readers and where a verbatim structure is required.
  NodeId append_gate(GateType t, std::span<const NodeId> operands);
  NodeId append_gate(GateType t, std::initializer_list<NodeId> operands) {
    return append_gate(t, std::span<const NodeId>(operands.begin(), operands.size()));
  }

  NodeId inv(NodeId a) { return add_gate(GateType::Inv, {a}); }
  NodeId and2(NodeId a, NodeId b) { return add_gate(GateType::And2, {a, b}); }
  NodeId or2(NodeId a, NodeId b) { return add_gate(GateType::Or2, {a, b}); }
  NodeId xor2(NodeId a, NodeId b) { return add_gate(GateType::Xor2, {a, b}); }
  NodeId xnor2(NodeId a, NodeId b) { return add_gate(GateType::Xnor2, {a, b}); }
  NodeId mux2(NodeId sel, NodeId then_, NodeId else_) {
    return add_gate(GateType::Mux2, {sel, then_, else_});
  }

  void add_output(std::string name, NodeId id);

  // Tag stamped on every node created from now on.
  void set_tag(std::uint16_t tag) { tag_ = tag; }

  const Node& node(NodeId id) const { return nodes_.at(id); }
  std::size_t size() const { return nodes_.size(); }
  bool is_const(NodeId id) const;
  bool const_value(NodeId id) const { return nodes_[id].type == GateType::Const1; }

  // Nodes created per type so far (the construction log).
  const std::array<std::size_t, kGateTypeCount>& tally() const { return tally_; }
  std::size_t hash_hits() const { return hash_hits_; }
  std::size_t folds() const { return folds_; }

  // Renumbers so inputs come first and returns the immutable netlist.
  Netlist finish() &&;

 private:
  NodeId push(const Node& n);
  NodeId lookup_or_push(const Node& n);
  NodeId simplify(GateType t, std::array<NodeId, 3> ops);
  void check_operands(GateType t, std::span<const NodeId> operands) const;
  void grow_table();
  std::size_t slot_of(const Node& n) const;

  BuildOptions opts_;
  std::vector<Node> nodes_;
  std::vector<std::uint16_t> tags_;
  std::vector<Port> inputs_;
  std::vector<Port> outputs_;
  std::vector<NodeId> table_;  // open addressing over node ids
  std::size_t table_used_ = 0;
  NodeId const_[2] = {kNoNode, kNoNode};
  std::uint16_t tag_ = 0;
  std::array<std::size_t, kGateTypeCount> tally_{};
  std::size_t hash_hits_ = 0;
  std::size_t folds_ = 0;
};

// Node ids in an order where every node follows its operands. For a finished
// netlist this is id order.
std::vector<NodeId> topo_order(const Netlist& n);

struct GateStats {
  std::array<std::size_t, kGateTypeCount> count{};
  std::size_t inputs = 0;
  std::size_t constants = 0;
  std::size_t logic_gates = 0;  // excludes INPUT and CONST nodes

  std::size_t of(GateType t) const { return count[static_cast<std::size_t>(t)]; }
  friend bool operator==(const GateStats&, const GateStats&) = default;
};

GateStats stats(const Netlist& n);
GateStats stats_from_tally(const std::array<std::size_t, kGateTypeCount>& tally);

// Line-oriented text format:
//   INPUT <id> <name>
//   GATE <id> <TYPE> [<op1> [<op2> [<op3>]]]
//   OUTPUT <name> <id>
std::string write_netlist(const Netlist& n);
Netlist read_netlist(std::string_view text);
Netlist read_netlist_file(const std::filesystem::path& path);
void write_netlist_file(const Netlist& n, const std::filesystem::path& path);

}  // namespace bnnc
