#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bnnc/netlist.hpp"

namespace bnnc {

struct PassReport {
  std::string pass;
  GateStats before;
  GateStats after;
  std::size_t nodes_removed = 0;  // node count decrease
  std::size_t nodes_merged = 0;   // structural-hash hits
  std::size_t folds = 0;          // Boolean identities applied
};

using PassResult = std::pair<Netlist, PassReport>;

// Rewrites every gate with constant (or trivially related) operands until no
// such gate remains.
PassResult const_fold(const Netlist& n);

// Global re-hash: merges structurally identical gates.
PassResult cse(const Netlist& n);

// Drops nodes not reachable from any output. Primary inputs always stay.
PassResult dce(const Netlist& n);

PassResult run_pass(std::string_view name, const Netlist& n);

inline constexpr int kMaxFixpointIterations = 10;

struct Pipeline {
  std::vector<std::string> passes;
  bool fixpoint = false;  // repeat until the netlist stops changing

  static Pipeline o0() { return {}; }
  static Pipeline o2() { return {{"const_fold", "cse", "dce"}, true}; }
};

// "O0", "O2", or a comma-separated pass list ("cse,dce").
Pipeline parse_pipeline(std::string_view spec);

std::pair<Netlist, std::vector<PassReport>> optimize(Netlist n, const Pipeline& p);

std::string format_pass_reports(const std::vector<PassReport>& reports);

}  // namespace bnnc
