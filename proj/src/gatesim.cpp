#include "bnnc/gatesim.hpp"

#include <algorithm>
#include <bit>
#include <iomanip>
#include <random>
#include <sstream>
#include <thread>

#include "bnnc/error.hpp"

namespace bnnc {

namespace {

void check_width(const Netlist& n, std::size_t got) {
  if (got != n.inputs().size())
    throw ShapeError("stimulus has " + std::to_string(got) + " bits, netlist has " +
                     std::to_string(n.inputs().size()) + " inputs");
}

// Packs vectors [first, first + count) of s into input words.
void pack(const StimuliSet& s, std::size_t first, std::size_t count, std::size_t ni,
          std::vector<std::uint64_t>& words) {
  words.assign(ni, 0);
  for (std::size_t j = 0; j < count; ++j) {
    const auto& v = s[first + j];
    for (std::size_t i = 0; i < ni; ++i)
      if (v[i]) words[i] |= 1ULL << j;
  }
}

template <typename Fn>
void for_each_block(std::size_t blocks, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(blocks, 1))));
  if (threads == 1) {
    for (std::size_t b = 0; b < blocks; ++b) fn(b);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < threads; ++t)
      workers.emplace_back([&, t] {
        try {
          for (std::size_t b = t; b < blocks; b += threads) fn(b);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

void evaluate_words(const Netlist& n, std::span<const std::uint64_t> inputs,
                    std::vector<std::uint64_t>& values) {
  check_width(n, inputs.size());
  values.resize(n.size());
  const Node* nodes = n.nodes().data();
  std::uint64_t* v = values.data();
  std::copy(inputs.begin(), inputs.end(), v);
  for (std::size_t id = inputs.size(); id < n.size(); ++id) {
    const Node& g = nodes[id];
    switch (g.type) {
      case GateType::Const0: v[id] = 0; break;
      case GateType::Const1: v[id] = ~0ULL; break;
      case GateType::Input: break;
      case GateType::Inv: v[id] = ~v[g.ops[0]]; break;
      case GateType::And2: v[id] = v[g.ops[0]] & v[g.ops[1]]; break;
      case GateType::Or2: v[id] = v[g.ops[0]] | v[g.ops[1]]; break;
      case GateType::Xor2: v[id] = v[g.ops[0]] ^ v[g.ops[1]]; break;
      case GateType::Xnor2: v[id] = ~(v[g.ops[0]] ^ v[g.ops[1]]); break;
      case GateType::Mux2: {
        const std::uint64_t s = v[g.ops[0]];
        v[id] = (s & v[g.ops[1]]) | (~s & v[g.ops[2]]);
        break;
      }
    }
  }
}

std::vector<std::uint8_t> evaluate(const Netlist& n, std::span<const std::uint8_t> inputs) {
  check_width(n, inputs.size());
  std::vector<std::uint8_t> v(n.size());
  std::copy(inputs.begin(), inputs.end(), v.begin());
  for (std::size_t id = inputs.size(); id < n.size(); ++id) {
    const Node& g = n.node(static_cast<NodeId>(id));
    const auto& o = g.ops;
    switch (g.type) {
      case GateType::Const0: v[id] = 0; break;
      case GateType::Const1: v[id] = 1; break;
      case GateType::Input: break;
      case GateType::Inv: v[id] = !v[o[0]]; break;
      case GateType::And2: v[id] = v[o[0]] && v[o[1]]; break;
      case GateType::Or2: v[id] = v[o[0]] || v[o[1]]; break;
      case GateType::Xor2: v[id] = v[o[0]] != v[o[1]]; break;
      case GateType::Xnor2: v[id] = v[o[0]] == v[o[1]]; break;
      case GateType::Mux2: v[id] = v[o[0]] ? v[o[1]] : v[o[2]]; break;
    }
  }
  std::vector<std::uint8_t> out;
  out.reserve(n.outputs().size());
  for (const Port& p : n.outputs()) out.push_back(v[p.id]);
  return out;
}

StimuliSet batch_evaluate(const Netlist& n, const StimuliSet& s, unsigned threads) {
  for (const auto& v : s) check_width(n, v.size());
  StimuliSet out(s.size(), std::vector<std::uint8_t>(n.outputs().size()));
  const std::size_t blocks = (s.size() + 63) / 64;
  const std::size_t ni = n.inputs().size();
  for_each_block(blocks, threads, [&](std::size_t blk) {
    std::vector<std::uint64_t> words, values;
    const std::size_t first = blk * 64;
    const std::size_t count = std::min<std::size_t>(64, s.size() - first);
    pack(s, first, count, ni, words);
    evaluate_words(n, words, values);
    for (std::size_t j = 0; j < count; ++j)
      for (std::size_t o = 0; o < n.outputs().size(); ++o)
        out[first + j][o] = (values[n.outputs()[o].id] >> j) & 1ULL;
  });
  return out;
}

std::vector<std::uint32_t> node_depths(const Netlist& n) {
  std::vector<std::uint32_t> d(n.size(), 0);
  for (std::size_t id = 0; id < n.size(); ++id) {
    std::uint32_t m = 0;
    bool any = false;
    for (NodeId op : n.node(static_cast<NodeId>(id)).operands()) {
      m = std::max(m, d[op]);
      any = true;
    }
    d[id] = any ? m + 1 : 0;
  }
  return d;
}

ToggleProfile toggle_profile(const Netlist& n, const StimuliSet& s) {
  for (const auto& v : s) check_width(n, v.size());
  ToggleProfile p;
  p.transitions = s.empty() ? 0 : s.size() - 1;
  p.per_node.assign(n.size(), 0);
  // Windows of 64 vectors overlapping by one, so every consecutive pair is
  // inside exactly one window.
  std::vector<std::uint64_t> words, values;
  for (std::size_t first = 0; first + 1 < s.size(); first += 63) {
    const std::size_t count = std::min<std::size_t>(64, s.size() - first);
    pack(s, first, count, n.inputs().size(), words);
    evaluate_words(n, words, values);
    const std::uint64_t pair_mask = (count == 64) ? ~0ULL >> 1 : ((1ULL << (count - 1)) - 1);
    for (std::size_t id = 0; id < n.size(); ++id) {
      const std::uint64_t v = values[id];
      p.per_node[id] += std::popcount((v ^ (v >> 1)) & pair_mask);
    }
  }
  const auto depths = node_depths(n);
  const std::uint32_t max_depth = depths.empty() ? 0 : *std::max_element(depths.begin(), depths.end());
  p.per_depth.assign(max_depth + 1, 0);
  p.nodes_per_depth.assign(max_depth + 1, 0);
  for (std::size_t id = 0; id < n.size(); ++id) {
    const GateType t = n.node(static_cast<NodeId>(id)).type;
    if (t == GateType::Const0 || t == GateType::Const1) continue;
    p.per_depth[depths[id]] += p.per_node[id];
    ++p.nodes_per_depth[depths[id]];
    p.total += p.per_node[id];
  }
  if (n.has_tags()) {
    const auto& tags = n.tags();
    const std::uint16_t max_tag = *std::max_element(tags.begin(), tags.end());
    p.per_tag.assign(max_tag + 1u, 0);
    p.nodes_per_tag.assign(max_tag + 1u, 0);
    for (std::size_t id = 0; id < n.size(); ++id) {
      const GateType t = n.node(static_cast<NodeId>(id)).type;
      if (t == GateType::Const0 || t == GateType::Const1) continue;
      p.per_tag[tags[id]] += p.per_node[id];
      ++p.nodes_per_tag[tags[id]];
    }
  }
  return p;
}

std::string format_toggle_report(const ToggleProfile& p) {
  std::ostringstream os;
  os << "toggle profile: " << p.transitions << " transitions, " << p.total << " toggles\n";
  auto rate = [&](std::uint64_t toggles, std::uint64_t nodes) {
    return nodes == 0 || p.transitions == 0
               ? 0.0
               : static_cast<double>(toggles) / static_cast<double>(nodes) / static_cast<double>(p.transitions);
  };
  if (!p.per_tag.empty()) {
    os << "  layer      nodes      toggles  rate/node/transition\n";
    for (std::size_t t = 0; t < p.per_tag.size(); ++t) {
      if (p.nodes_per_tag[t] == 0) continue;
      os << "  " << std::setw(5) << (t == 0 ? std::string("in") : std::to_string(t)) << std::setw(11)
         << p.nodes_per_tag[t] << std::setw(13) << p.per_tag[t] << std::setw(22) << std::fixed
         << std::setprecision(4) << rate(p.per_tag[t], p.nodes_per_tag[t]) << "\n";
    }
  }
  os << "  depth      nodes      toggles  rate/node/transition\n";
  for (std::size_t d = 0; d < p.per_depth.size(); ++d) {
    if (p.nodes_per_depth[d] == 0) continue;
    os << "  " << std::setw(5) << d << std::setw(11) << p.nodes_per_depth[d] << std::setw(13)
       << p.per_depth[d] << std::setw(22) << std::fixed << std::setprecision(4)
       << rate(p.per_depth[d], p.nodes_per_depth[d]) << "\n";
  }
  return os.str();
}

std::vector<BinaryFrame> random_frames(const Shape& shape, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<BinaryFrame> frames;
  frames.reserve(count);
  for (std::size_t f = 0; f < count; ++f) {
    BinaryFrame frame(shape);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < frame.bits.size(); ++i) {
      if (i % 64 == 0) word = rng();
      frame.bits[i] = (word >> (i % 64)) & 1ULL;
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

std::vector<std::uint8_t> stimulus_for(const BnnModel& m, LowerMode mode, const BinaryFrame& frame) {
  if (frame.shape != m.input) throw ShapeError("frame shape does not match model input");
  std::vector<std::uint8_t> v = frame.bits;
  if (mode == LowerMode::Variable) {
    auto params = parameter_values(m);
    v.insert(v.end(), params.begin(), params.end());
  }
  return v;
}

EquivResult check_equivalence(const Netlist& n, const BnnModel& m, LowerMode mode,
                              const EquivStrategy& strategy, unsigned threads) {
  const auto in_names = input_names(m, mode);
  const auto out_names = output_names(m);
  if (n.inputs().size() != in_names.size())
    throw ShapeError("netlist has " + std::to_string(n.inputs().size()) + " inputs, model in " +
                     std::string(to_string(mode)) + " mode needs " + std::to_string(in_names.size()));
  for (std::size_t i = 0; i < in_names.size(); ++i)
    if (n.inputs()[i].name != in_names[i])
      throw ShapeError("netlist input " + std::to_string(i) + " is \"" + n.inputs()[i].name +
                       "\", expected \"" + in_names[i] + "\"");
  if (n.outputs().size() != out_names.size())
    throw ShapeError("netlist has " + std::to_string(n.outputs().size()) + " outputs, expected " +
                     std::to_string(out_names.size()));
  for (std::size_t i = 0; i < out_names.size(); ++i)
    if (n.outputs()[i].name != out_names[i])
      throw ShapeError("netlist output " + std::to_string(i) + " is \"" + n.outputs()[i].name +
                       "\", expected \"" + out_names[i] + "\"");

  const std::size_t image_bits = m.input.size();
  std::size_t total = 0;
  if (strategy.kind == EquivStrategy::Kind::Exhaustive) {
    if (image_bits > kMaxExhaustiveInputs)
      throw ShapeError("exhaustive check over " + std::to_string(image_bits) +
                       " input bits exceeds the limit of " + std::to_string(kMaxExhaustiveInputs));
    total = std::size_t{1} << image_bits;
  } else {
    total = strategy.count;
  }
  const std::vector<BinaryFrame> sampled =
      strategy.kind == EquivStrategy::Kind::Random ? random_frames(m.input, total, strategy.seed)
                                                   : std::vector<BinaryFrame>{};
  auto frame_at = [&](std::size_t idx) {
    if (strategy.kind == EquivStrategy::Kind::Random) return sampled[idx];
    BinaryFrame f(m.input);
    for (std::size_t i = 0; i < image_bits; ++i) f.bits[i] = (idx >> i) & 1u;
    return f;
  };

  const auto params = mode == LowerMode::Variable ? parameter_values(m) : std::vector<std::uint8_t>{};
  const std::size_t blocks = (total + 63) / 64;
  std::vector<std::optional<Counterexample>> first_fail(blocks);
  for_each_block(blocks, threads, [&](std::size_t blk) {
    const std::size_t first = blk * 64;
    const std::size_t count = std::min<std::size_t>(64, total - first);
    std::vector<BinaryFrame> frames;
    frames.reserve(count);
    for (std::size_t j = 0; j < count; ++j) frames.push_back(frame_at(first + j));
    std::vector<std::uint64_t> words(n.inputs().size(), 0), values;
    for (std::size_t j = 0; j < count; ++j)
      for (std::size_t i = 0; i < image_bits; ++i)
        if (frames[j].bits[i]) words[i] |= 1ULL << j;
    for (std::size_t i = 0; i < params.size(); ++i) words[image_bits + i] = params[i] ? ~0ULL : 0ULL;
    evaluate_words(n, words, values);
    std::vector<std::uint8_t> outs(n.outputs().size());
    for (std::size_t j = 0; j < count; ++j) {
      for (std::size_t o = 0; o < outs.size(); ++o) outs[o] = (values[n.outputs()[o].id] >> j) & 1ULL;
      std::vector<int> got = decode_scores(m, outs);
      Inference ref = infer(m, frames[j]);
      if (got != ref.scores) {
        first_fail[blk] = Counterexample{first + j, frames[j], ref.scores, got};
        return;
      }
    }
  });

  EquivResult r;
  r.vectors = total;
  for (auto& f : first_fail)
    if (f) {
      r.pass = false;
      r.counterexample = std::move(f);
      break;
    }
  return r;
}

}  // namespace bnnc
