#include "bnnc/netlist.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "bnnc/error.hpp"

namespace bnnc {

namespace {

constexpr std::array<std::string_view, kGateTypeCount> kTypeNames = {
    "CONST0", "CONST1", "INPUT", "INV", "AND2", "OR2", "XOR2", "XNOR2", "MUX2"};

std::size_t hash_node(const Node& n) {
  std::uint64_t h = static_cast<std::uint64_t>(n.type) * 0x9E3779B97F4A7C15ULL;
  for (NodeId op : n.ops) {
    h ^= op + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    h *= 0xBF58476D1CE4E5B9ULL;
  }
  return static_cast<std::size_t>(h ^ (h >> 31));
}

}  // namespace

std::string_view to_string(GateType t) { return kTypeNames[static_cast<std::size_t>(t)]; }

GateType parse_gate_type(std::string_view s) {
  for (std::size_t i = 0; i < kTypeNames.size(); ++i)
    if (kTypeNames[i] == s) return static_cast<GateType>(i);
  throw NetlistError("unknown gate type \"" + std::string(s) + "\"");
}

int arity(GateType t) {
  switch (t) {
    case GateType::Const0:
    case GateType::Const1:
    case GateType::Input: return 0;
    case GateType::Inv: return 1;
    case GateType::Mux2: return 3;
    default: return 2;
  }
}

bool is_commutative(GateType t) {
  return t == GateType::And2 || t == GateType::Or2 || t == GateType::Xor2 ||
         t == GateType::Xnor2;
}

Netlist::Netlist(std::vector<Node> nodes, std::vector<Port> inputs, std::vector<Port> outputs,
                 std::vector<std::uint16_t> tags)
    : nodes_(std::move(nodes)),
      inputs_(std::move(inputs)),
      outputs_(std::move(outputs)),
      tags_(std::move(tags)) {
  if (!tags_.empty() && tags_.size() != nodes_.size())
    throw NetlistError("tag table size does not match node count");
  if (inputs_.size() > nodes_.size()) throw NetlistError("more inputs than nodes");
  for (std::size_t i = 0; i < inputs_.size(); ++i)
    if (inputs_[i].id != i || nodes_[i].type != GateType::Input)
      throw NetlistError("input " + inputs_[i].name + " must occupy id " + std::to_string(i));
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const Node& n = nodes_[id];
    if (n.type == GateType::Input && id >= inputs_.size())
      throw NetlistError("node " + std::to_string(id) + " is an undeclared input");
    const int k = arity(n.type);
    for (int i = 0; i < 3; ++i) {
      if (i < k) {
        if (n.ops[i] >= id)
          throw NetlistError("node " + std::to_string(id) + " operand " + std::to_string(n.ops[i]) +
                             " does not precede it");
      } else if (n.ops[i] != kNoNode) {
        throw NetlistError("node " + std::to_string(id) + " has too many operands");
      }
    }
  }
  for (const Port& p : outputs_)
    if (p.id >= nodes_.size())
      throw NetlistError("output " + p.name + " refers to missing node " + std::to_string(p.id));
}

NetlistBuilder::NetlistBuilder(BuildOptions opts) : opts_(opts) {
  if (opts_.hash) table_.assign(1024, kNoNode);
}

NodeId NetlistBuilder::push(const Node& n) {
  if (nodes_.size() >= kNoNode - 1) throw NetlistError("netlist too large");
  nodes_.push_back(n);
  tags_.push_back(tag_);
  ++tally_[static_cast<std::size_t>(n.type)];
  return static_cast<NodeId>(nodes_.size() - 1);
}

std::size_t NetlistBuilder::slot_of(const Node& n) const {
  const std::size_t mask = table_.size() - 1;
  std::size_t s = hash_node(n) & mask;
  while (table_[s] != kNoNode && nodes_[table_[s]] != n) s = (s + 1) & mask;
  return s;
}

void NetlistBuilder::grow_table() {
  std::vector<NodeId> old = std::move(table_);
  table_.assign(old.size() * 2, kNoNode);
  for (NodeId id : old)
    if (id != kNoNode) table_[slot_of(nodes_[id])] = id;
}

NodeId NetlistBuilder::lookup_or_push(const Node& n) {
  if ((table_used_ + 1) * 2 > table_.size()) grow_table();
  std::size_t s = slot_of(n);
  if (table_[s] != kNoNode) {
    ++hash_hits_;
    return table_[s];
  }
  NodeId id = push(n);
  table_[s] = id;
  ++table_used_;
  return id;
}

NodeId NetlistBuilder::add_input(std::string name) {
  Node n;
  n.type = GateType::Input;
  NodeId id = push(n);
  inputs_.push_back({std::move(name), id});
  return id;
}

NodeId NetlistBuilder::constant(bool value) {
  NodeId& c = const_[value ? 1 : 0];
  if (c == kNoNode) {
    Node n;
    n.type = value ? GateType::Const1 : GateType::Const0;
    c = opts_.hash ? lookup_or_push(n) : push(n);
  }
  return c;
}

bool NetlistBuilder::is_const(NodeId id) const {
  GateType t = nodes_[id].type;
  return t == GateType::Const0 || t == GateType::Const1;
}

void NetlistBuilder::check_operands(GateType t, std::span<const NodeId> operands) const {
  if (static_cast<int>(operands.size()) != arity(t))
    throw NetlistError(std::string(to_string(t)) + " takes " + std::to_string(arity(t)) +
                       " operands, got " + std::to_string(operands.size()));
  for (NodeId op : operands)
    if (op >= nodes_.size()) throw NetlistError("unknown operand node " + std::to_string(op));
}

NodeId NetlistBuilder::add_gate(GateType t, std::span<const NodeId> operands) {
  if (t == GateType::Input) throw NetlistError("use add_input for primary inputs");
  check_operands(t, operands);
  if (t == GateType::Const0 || t == GateType::Const1) return constant(t == GateType::Const1);
  std::array<NodeId, 3> ops{kNoNode, kNoNode, kNoNode};
  std::copy(operands.begin(), operands.end(), ops.begin());
  if (opts_.fold) return simplify(t, ops);
  if (is_commutative(t) && ops[1] < ops[0]) std::swap(ops[0], ops[1]);
  Node n{t, ops};
  return opts_.hash ? lookup_or_push(n) : push(n);
}

NodeId NetlistBuilder::append_gate(GateType t, std::span<const NodeId> operands) {
  if (t == GateType::Input) throw NetlistError("use add_input for primary inputs");
  check_operands(t, operands);
  Node n;
  n.type = t;
  std::copy(operands.begin(), operands.end(), n.ops.begin());
  NodeId id = push(n);
  if (opts_.hash) {
    if ((table_used_ + 1) * 2 > table_.size()) grow_table();
    std::size_t s = slot_of(n);
    if (table_[s] == kNoNode) {
      table_[s] = id;
      ++table_used_;
    }
  }
  if (t == GateType::Const0 && const_[0] == kNoNode) const_[0] = id;
  if (t == GateType::Const1 && const_[1] == kNoNode) const_[1] = id;
  return id;
}

NodeId NetlistBuilder::simplify(GateType t, std::array<NodeId, 3> o) {
  auto inv_of = [&](NodeId x) {
    return nodes_[x].type == GateType::Inv ? nodes_[x].ops[0] : kNoNode;
  };
  auto complementary = [&](NodeId a, NodeId b) { return inv_of(a) == b || inv_of(b) == a; };
  auto folded = [&](NodeId r) {
    ++folds_;
    return r;
  };

  if (t == GateType::Inv) {
    NodeId a = o[0];
    if (is_const(a)) return folded(constant(!const_value(a)));
    if (inv_of(a) != kNoNode) return folded(inv_of(a));
  } else if (t == GateType::Mux2) {
    NodeId s = o[0], th = o[1], el = o[2];
    if (is_const(s)) return folded(const_value(s) ? th : el);
    if (th == el) return folded(th);
    if (is_const(th) && is_const(el))
      return folded(const_value(th) ? s : inv(s));
    if (is_const(th)) return folded(const_value(th) ? or2(s, el) : and2(inv(s), el));
    if (is_const(el)) return folded(const_value(el) ? or2(inv(s), th) : and2(s, th));
    if (th == s) return folded(or2(s, el));
    if (el == s) return folded(and2(s, th));
    if (inv_of(s) != kNoNode) return folded(mux2(inv_of(s), el, th));
  } else {
    NodeId a = o[0], b = o[1];
    if (b < a) std::swap(a, b);
    o[0] = a;
    o[1] = b;
    const bool ca = is_const(a), cb = is_const(b);
    if (ca || cb) {
      const bool v = ca ? const_value(a) : const_value(b);
      const NodeId x = ca ? b : a;
      if (ca && cb) {
        const bool va = const_value(a), vb = const_value(b);
        switch (t) {
          case GateType::And2: return folded(constant(va && vb));
          case GateType::Or2: return folded(constant(va || vb));
          case GateType::Xor2: return folded(constant(va != vb));
          default: return folded(constant(va == vb));
        }
      }
      switch (t) {
        case GateType::And2: return folded(v ? x : constant(false));
        case GateType::Or2: return folded(v ? constant(true) : x);
        case GateType::Xor2: return folded(v ? inv(x) : x);
        default: return folded(v ? x : inv(x));
      }
    }
    if (a == b) {
      switch (t) {
        case GateType::And2:
        case GateType::Or2: return folded(a);
        case GateType::Xor2: return folded(constant(false));
        default: return folded(constant(true));
      }
    }
    if (complementary(a, b)) {
      switch (t) {
        case GateType::And2: return folded(constant(false));
        case GateType::Or2: return folded(constant(true));
        case GateType::Xor2: return folded(constant(true));
        default: return folded(constant(false));
      }
    }
    if (t == GateType::Xor2 || t == GateType::Xnor2) {
      // Pull inverters out of parity gates so both polarities share one gate.
      const NodeId ia = inv_of(a), ib = inv_of(b);
      if (ia != kNoNode && ib != kNoNode) return folded(add_gate(t, {ia, ib}));
      if (ia != kNoNode || ib != kNoNode) {
        const NodeId p = ia != kNoNode ? ia : a;
        const NodeId q = ib != kNoNode ? ib : b;
        return folded(t == GateType::Xor2 ? inv(xor2(p, q)) : xor2(p, q));
      }
    }
  }
  Node n{t, o};
  return opts_.hash ? lookup_or_push(n) : push(n);
}

void NetlistBuilder::add_output(std::string name, NodeId id) {
  if (id >= nodes_.size()) throw NetlistError("output " + name + " refers to unknown node");
  outputs_.push_back({std::move(name), id});
}

Netlist NetlistBuilder::finish() && {
  const std::size_t ni = inputs_.size();
  std::vector<NodeId> remap(nodes_.size(), kNoNode);
  for (std::size_t i = 0; i < ni; ++i) remap[inputs_[i].id] = static_cast<NodeId>(i);
  NodeId next = static_cast<NodeId>(ni);
  for (std::size_t id = 0; id < nodes_.size(); ++id)
    if (nodes_[id].type != GateType::Input) remap[id] = next++;

  std::vector<Node> nodes(nodes_.size());
  std::vector<std::uint16_t> tags(nodes_.size());
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    Node n = nodes_[id];
    for (NodeId& op : n.ops)
      if (op != kNoNode) op = remap[op];
    nodes[remap[id]] = n;
    tags[remap[id]] = tags_[id];
  }
  std::vector<Port> inputs = std::move(inputs_);
  for (Port& p : inputs) p.id = remap[p.id];
  std::vector<Port> outputs = std::move(outputs_);
  for (Port& p : outputs) p.id = remap[p.id];
  nodes_.clear();
  table_.clear();
  return Netlist(std::move(nodes), std::move(inputs), std::move(outputs), std::move(tags));
}

std::vector<NodeId> topo_order(const Netlist& n) {
  std::vector<NodeId> order(n.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<NodeId>(i);
  return order;
}

GateStats stats_from_tally(const std::array<std::size_t, kGateTypeCount>& tally) {
  GateStats s;
  s.count = tally;
  s.inputs = s.of(GateType::Input);
  s.constants = s.of(GateType::Const0) + s.of(GateType::Const1);
  for (std::size_t i = 0; i < kGateTypeCount; ++i) s.logic_gates += tally[i];
  s.logic_gates -= s.inputs + s.constants;
  return s;
}

GateStats stats(const Netlist& n) {
  std::array<std::size_t, kGateTypeCount> tally{};
  for (const Node& node : n.nodes()) ++tally[static_cast<std::size_t>(node.type)];
  return stats_from_tally(tally);
}

std::string write_netlist(const Netlist& n) {
  std::string out;
  out.reserve(n.size() * 24 + n.inputs().size() * 16);
  char buf[16];
  auto num = [&](std::uint32_t v) {
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
  };
  for (const Port& p : n.inputs()) {
    out += "INPUT ";
    num(p.id);
    out += ' ';
    out += p.name;
    out += '\n';
  }
  for (std::size_t id = n.inputs().size(); id < n.size(); ++id) {
    const Node& node = n.node(static_cast<NodeId>(id));
    out += "GATE ";
    num(static_cast<std::uint32_t>(id));
    out += ' ';
    out += to_string(node.type);
    for (NodeId op : node.operands()) {
      out += ' ';
      num(op);
    }
    out += '\n';
  }
  for (const Port& p : n.outputs()) {
    out += "OUTPUT ";
    out += p.name;
    out += ' ';
    num(p.id);
    out += '\n';
  }
  return out;
}

namespace {

std::uint32_t parse_id(std::string_view tok, std::size_t lineno) {
  std::uint32_t v = 0;
  auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (r.ec != std::errc() || r.ptr != tok.data() + tok.size() || v == kNoNode)
    throw NetlistError("line " + std::to_string(lineno) + ": bad node id \"" + std::string(tok) + "\"");
  return v;
}

}  // namespace

Netlist read_netlist(std::string_view text) {
  std::vector<Node> nodes;
  std::vector<Port> inputs, outputs;
  std::size_t pos = 0, lineno = 0;
  std::vector<std::string_view> tok;
  enum { kInputs, kGates, kOutputs } section = kInputs;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    tok.clear();
    for (std::size_t i = 0; i < line.size();) {
      while (i < line.size() && line[i] == ' ') ++i;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ') ++j;
      if (j > i) tok.push_back(line.substr(i, j - i));
      i = j;
    }
    if (tok.empty() || tok[0].front() == '#') continue;
    auto where = [&] { return "line " + std::to_string(lineno) + ": "; };
    if (tok[0] == "INPUT") {
      if (section != kInputs) throw NetlistError(where() + "INPUT after GATE/OUTPUT lines");
      if (tok.size() != 3) throw NetlistError(where() + "expected INPUT <id> <name>");
      std::uint32_t id = parse_id(tok[1], lineno);
      if (id != nodes.size()) throw NetlistError(where() + "input ids must be dense and ordered");
      Node n;
      n.type = GateType::Input;
      nodes.push_back(n);
      inputs.push_back({std::string(tok[2]), id});
    } else if (tok[0] == "GATE") {
      if (section == kOutputs) throw NetlistError(where() + "GATE after OUTPUT lines");
      section = kGates;
      if (tok.size() < 3) throw NetlistError(where() + "expected GATE <id> <TYPE> ...");
      std::uint32_t id = parse_id(tok[1], lineno);
      if (id != nodes.size()) throw NetlistError(where() + "gate ids must be dense and ordered");
      Node n;
      try {
        n.type = parse_gate_type(tok[2]);
      } catch (const NetlistError& e) {
        throw NetlistError(where() + e.what());
      }
      if (n.type == GateType::Input) throw NetlistError(where() + "INPUT is not a gate type");
      if (static_cast<int>(tok.size()) - 3 != arity(n.type))
        throw NetlistError(where() + std::string(to_string(n.type)) + " takes " +
                           std::to_string(arity(n.type)) + " operands");
      for (std::size_t k = 3; k < tok.size(); ++k) {
        std::uint32_t op = parse_id(tok[k], lineno);
        if (op >= id) throw NetlistError(where() + "operand " + std::to_string(op) + " does not precede gate");
        n.ops[k - 3] = op;
      }
      nodes.push_back(n);
    } else if (tok[0] == "OUTPUT") {
      section = kOutputs;
      if (tok.size() != 3) throw NetlistError(where() + "expected OUTPUT <name> <id>");
      std::uint32_t id = parse_id(tok[2], lineno);
      if (id >= nodes.size()) throw NetlistError(where() + "output refers to unknown node");
      outputs.push_back({std::string(tok[1]), id});
    } else {
      throw NetlistError(where() + "unknown record \"" + std::string(tok[0]) + "\"");
    }
  }
  return Netlist(std::move(nodes), std::move(inputs), std::move(outputs));
}

Netlist read_netlist_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NetlistError("cannot open netlist file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return read_netlist(ss.str());
  } catch (const NetlistError& e) {
    throw NetlistError(path.string() + ": " + e.what());
  }
}

void write_netlist_file(const Netlist& n, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NetlistError("cannot write netlist file " + path.string());
  std::string text = write_netlist(n);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw NetlistError("write failed for " + path.string());
}

}  // namespace bnnc
