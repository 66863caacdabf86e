#include "bnnc/optimize.hpp"

#include <iomanip>
#include <sstream>

#include "bnnc/error.hpp"

namespace bnnc {

namespace {

// Re-adds every node through a builder with the given options, preserving
// input order and names, output order and names, and tags.
Netlist rebuild(const Netlist& n, BuildOptions opts, std::size_t& hits, std::size_t& folds) {
  NetlistBuilder b(opts);
  std::vector<NodeId> map(n.size(), kNoNode);
  const bool tagged = n.has_tags();
  for (std::size_t id = 0; id < n.size(); ++id) {
    const Node& node = n.node(static_cast<NodeId>(id));
    if (tagged) b.set_tag(n.tags()[id]);
    switch (node.type) {
      case GateType::Input: map[id] = b.add_input(n.inputs()[id].name); break;
      case GateType::Const0: map[id] = b.constant(false); break;
      case GateType::Const1: map[id] = b.constant(true); break;
      default: {
        NodeId ops[3];
        const auto src = node.operands();
        for (std::size_t k = 0; k < src.size(); ++k) ops[k] = map[src[k]];
        map[id] = b.add_gate(node.type, std::span<const NodeId>(ops, src.size()));
      }
    }
  }
  for (const Port& p : n.outputs()) b.add_output(p.name, map[p.id]);
  hits = b.hash_hits();
  folds = b.folds();
  Netlist out = std::move(b).finish();
  if (!tagged) out = Netlist(out.nodes(), out.inputs(), out.outputs());
  return out;
}

PassReport make_report(std::string name, const Netlist& before, const Netlist& after) {
  PassReport r;
  r.pass = std::move(name);
  r.before = stats(before);
  r.after = stats(after);
  r.nodes_removed = before.size() > after.size() ? before.size() - after.size() : 0;
  return r;
}

}  // namespace

PassResult const_fold(const Netlist& n) {
  std::size_t hits = 0, folds = 0;
  Netlist out = rebuild(n, {.fold = true, .hash = false}, hits, folds);
  PassReport r = make_report("const_fold", n, out);
  r.folds = folds;
  return {std::move(out), std::move(r)};
}

PassResult cse(const Netlist& n) {
  std::size_t hits = 0, folds = 0;
  Netlist out = rebuild(n, {.fold = false, .hash = true}, hits, folds);
  PassReport r = make_report("cse", n, out);
  r.nodes_merged = hits;
  return {std::move(out), std::move(r)};
}

PassResult dce(const Netlist& n) {
  std::vector<std::uint8_t> live(n.size(), 0);
  for (const Port& p : n.outputs()) live[p.id] = 1;
  for (std::size_t id = n.size(); id-- > 0;) {
    if (!live[id]) continue;
    for (NodeId op : n.node(static_cast<NodeId>(id)).operands()) live[op] = 1;
  }
  for (std::size_t i = 0; i < n.inputs().size(); ++i) live[i] = 1;

  std::vector<NodeId> map(n.size(), kNoNode);
  std::vector<Node> nodes;
  std::vector<std::uint16_t> tags;
  for (std::size_t id = 0; id < n.size(); ++id) {
    if (!live[id]) continue;
    Node node = n.node(static_cast<NodeId>(id));
    for (NodeId& op : node.ops)
      if (op != kNoNode) op = map[op];
    map[id] = static_cast<NodeId>(nodes.size());
    nodes.push_back(node);
    if (n.has_tags()) tags.push_back(n.tags()[id]);
  }
  std::vector<Port> outputs = n.outputs();
  for (Port& p : outputs) p.id = map[p.id];
  Netlist out(std::move(nodes), n.inputs(), std::move(outputs), std::move(tags));
  PassReport r = make_report("dce", n, out);
  return {std::move(out), std::move(r)};
}

PassResult run_pass(std::string_view name, const Netlist& n) {
  if (name == "const_fold") return const_fold(n);
  if (name == "cse") return cse(n);
  if (name == "dce") return dce(n);
  throw ConfigError("unknown pass \"" + std::string(name) + "\" (expected const_fold, cse or dce)");
}

Pipeline parse_pipeline(std::string_view spec) {
  if (spec == "O0") return Pipeline::o0();
  if (spec == "O2") return Pipeline::o2();
  Pipeline p;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    std::size_t end = spec.find(',', pos);
    if (end == std::string_view::npos) end = spec.size();
    std::string_view name = spec.substr(pos, end - pos);
    if (name != "const_fold" && name != "cse" && name != "dce")
      throw ConfigError("unknown pass \"" + std::string(name) + "\" (expected const_fold, cse or dce)");
    p.passes.emplace_back(name);
    pos = end + 1;
  }
  return p;
}

std::pair<Netlist, std::vector<PassReport>> optimize(Netlist n, const Pipeline& p) {
  for (const auto& name : p.passes)
    if (name != "const_fold" && name != "cse" && name != "dce")
      throw ConfigError("unknown pass \"" + name + "\" (expected const_fold, cse or dce)");
  std::vector<PassReport> reports;
  const int rounds = p.fixpoint ? kMaxFixpointIterations : 1;
  for (int round = 0; round < rounds; ++round) {
    Netlist start = n;
    for (const auto& name : p.passes) {
      auto [next, report] = run_pass(name, n);
      n = std::move(next);
      reports.push_back(std::move(report));
    }
    if (n == start) break;
  }
  return {std::move(n), std::move(reports)};
}

std::string format_pass_reports(const std::vector<PassReport>& reports) {
  std::ostringstream os;
  os << "pass          gates_before  gates_after  removed   merged    folds\n";
  for (const PassReport& r : reports)
    os << std::left << std::setw(12) << r.pass << std::right << std::setw(14) << r.before.logic_gates
       << std::setw(13) << r.after.logic_gates << std::setw(9) << r.nodes_removed << std::setw(9)
       << r.nodes_merged << std::setw(9) << r.folds << "\n";
  return os.str();
}

}  // namespace bnnc
