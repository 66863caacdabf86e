#include "bnnc/lowering.hpp"

#include <bit>

#include "bnnc/error.hpp"

namespace bnnc {

namespace {

struct Partial {
  Bus bits;
  long long max = 0;
};

// Ripple-carry add. The final carry is only built when the sum can need it.
Partial ripple_add(NetlistBuilder& b, const Partial& x, const Partial& y) {
  Partial r;
  r.max = x.max + y.max;
  const std::size_t w = std::max(x.bits.size(), y.bits.size());
  const bool carry_out = std::bit_width(static_cast<unsigned long long>(r.max)) > w;
  NodeId carry = kNoNode;
  for (std::size_t i = 0; i < w; ++i) {
    const bool last = i + 1 == w;
    const bool need_carry = !last || carry_out;
    NodeId ops[3];
    int k = 0;
    if (i < x.bits.size()) ops[k++] = x.bits[i];
    if (i < y.bits.size()) ops[k++] = y.bits[i];
    if (carry != kNoNode) ops[k++] = carry;
    if (k == 1) {
      r.bits.push_back(ops[0]);
      carry = kNoNode;
    } else if (k == 2) {  // half adder
      r.bits.push_back(b.xor2(ops[0], ops[1]));
      carry = need_carry ? b.and2(ops[0], ops[1]) : kNoNode;
    } else {  // full adder: 2 XOR2 + 2 AND2 + OR2
      NodeId t = b.xor2(ops[0], ops[1]);
      r.bits.push_back(b.xor2(t, ops[2]));
      carry = need_carry ? b.or2(b.and2(ops[0], ops[1]), b.and2(t, ops[2])) : kNoNode;
    }
  }
  if (carry_out) r.bits.push_back(carry != kNoNode ? carry : b.constant(false));
  return r;
}

Bus constant_bus(NetlistBuilder& b, unsigned long long value, std::size_t width) {
  Bus bus(width);
  for (std::size_t i = 0; i < width; ++i) bus[i] = b.constant(((value >> i) & 1ULL) != 0);
  return bus;
}

std::string pname(const char* kind, std::size_t layer, int map) {
  return std::string(kind) + "_L" + std::to_string(layer + 1) + "_m" + std::to_string(map);
}

struct LayerParams {
  std::vector<std::vector<NodeId>> weights;  // [map][i]
  std::vector<Bus> thresh;
  std::vector<NodeId> sel, cst;
};

LayerParams declare_params(NetlistBuilder& b, const Layer& l, std::size_t li) {
  LayerParams p;
  const int n_rf = l.spec.receptive_field();
  const int tw = popcount_width(n_rf);
  for (int m = 0; m < l.spec.out_maps; ++m) {
    std::vector<NodeId> w(static_cast<std::size_t>(n_rf));
    for (int i = 0; i < n_rf; ++i) w[i] = b.add_input(pname("w", li, m) + "_" + std::to_string(i));
    Bus t(static_cast<std::size_t>(tw));
    for (int i = 0; i < tw; ++i) t[i] = b.add_input(pname("t", li, m) + "_" + std::to_string(i));
    p.weights.push_back(std::move(w));
    p.thresh.push_back(std::move(t));
    p.sel.push_back(b.add_input(pname("sel", li, m)));
    p.cst.push_back(b.add_input(pname("cst", li, m)));
  }
  return p;
}

// One receptive-field operand after the XNOR stage.
NodeId product(NetlistBuilder& b, LowerMode mode, const Layer& l, const LayerParams& p, int m,
               int i, NodeId src) {
  if (mode == LowerMode::Fixed) {
    // weight 1: wire, weight 0: (shared) inverter
    return l.neurons[m].weights[i] ? src : b.inv(src);
  }
  NodeId w = p.weights[m][i];
  return b.append_gate(GateType::Xnor2, {std::min(w, src), std::max(w, src)});
}

NodeId binarize(NetlistBuilder& b, LowerMode mode, const Layer& l, const LayerParams& p, int m,
                const Bus& phi) {
  if (mode == LowerMode::Variable)
    return build_threshold_unit(b, phi, p.thresh[m], p.sel[m], p.cst[m]);
  const NeuronParams& n = l.neurons[m];
  switch (n.sign) {
    case Compare::Geq: return build_geq_const(b, phi, n.thresh);
    case Compare::Leq: return build_leq_const(b, phi, n.thresh);
    case Compare::Const1: return b.constant(true);
    case Compare::Const0: return b.constant(false);
  }
  return b.constant(false);
}

}  // namespace

std::string_view to_string(LowerMode m) { return m == LowerMode::Fixed ? "fixed" : "variable"; }

LowerMode parse_lower_mode(std::string_view s) {
  if (s == "fixed") return LowerMode::Fixed;
  if (s == "variable") return LowerMode::Variable;
  throw ConfigError("unknown mode \"" + std::string(s) + "\" (expected fixed|variable)");
}

Bus build_popcount_tree(NetlistBuilder& b, std::span<const NodeId> bits) {
  if (bits.empty()) throw NetlistError("popcount over an empty operand list");
  std::vector<Partial> level;
  level.reserve(bits.size());
  for (NodeId id : bits) level.push_back({{id}, 1});
  while (level.size() > 1) {
    std::vector<Partial> next;
    next.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) next.push_back(ripple_add(b, level[i], level[i + 1]));
    if (level.size() % 2 == 1) next.push_back(std::move(level.back()));
    level = std::move(next);
  }
  return std::move(level.front().bits);
}

CompareResult build_compare(NetlistBuilder& b, const Bus& a, const Bus& bb) {
  const std::size_t w = std::max(a.size(), bb.size());
  const NodeId zero = b.constant(false);
  NodeId gt = zero;
  NodeId eq = b.constant(true);
  for (std::size_t i = w; i-- > 0;) {
    NodeId ai = i < a.size() ? a[i] : zero;
    NodeId bi = i < bb.size() ? bb[i] : zero;
    gt = b.or2(gt, b.and2(eq, b.and2(ai, b.inv(bi))));
    eq = b.and2(eq, b.xnor2(ai, bi));
  }
  return {gt, eq};
}

NodeId build_comparator(NetlistBuilder& b, const Bus& a, const Bus& bb, Direction dir) {
  if (dir == Direction::Geq) {
    CompareResult r = build_compare(b, a, bb);
    return b.or2(r.gt, r.eq);
  }
  CompareResult r = build_compare(b, bb, a);
  return b.or2(r.gt, r.eq);
}

NodeId build_geq_const(NetlistBuilder& b, const Bus& bus, long long k) {
  if (k <= 0) return b.constant(true);
  if (bus.size() < 63 && k > static_cast<long long>((1ULL << bus.size()) - 1)) return b.constant(false);
  return build_comparator(b, bus, constant_bus(b, static_cast<unsigned long long>(k), bus.size()),
                          Direction::Geq);
}

NodeId build_leq_const(NetlistBuilder& b, const Bus& bus, long long k) {
  if (k < 0) return b.constant(false);
  if (bus.size() < 63 && k >= static_cast<long long>((1ULL << bus.size()) - 1)) return b.constant(true);
  return build_comparator(b, bus, constant_bus(b, static_cast<unsigned long long>(k), bus.size()),
                          Direction::Leq);
}

NodeId build_threshold_unit(NetlistBuilder& b, const Bus& phi, const Bus& thresh, NodeId sel,
                            NodeId cst) {
  CompareResult r = build_compare(b, phi, thresh);
  NodeId geq = b.or2(r.gt, r.eq);
  NodeId leq = b.inv(r.gt);
  return b.mux2(cst, sel, b.mux2(sel, leq, geq));
}

Netlist lower_model(const BnnModel& m, LowerMode mode) {
  validate(m);
  NetlistBuilder b;
  b.set_tag(0);
  const Shape& in = m.input;
  std::vector<NodeId> cur;
  cur.reserve(in.size());
  for (int c = 0; c < in.channels; ++c)
    for (int y = 0; y < in.height; ++y)
      for (int x = 0; x < in.width; ++x)
        cur.push_back(b.add_input("x_" + std::to_string(c) + "_" + std::to_string(y) + "_" +
                                  std::to_string(x)));
  const NodeId pad = b.constant(false);

  Shape shape = in;
  std::vector<NodeId> operands;
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const Layer& l = m.layers[li];
    const LayerSpec& s = l.spec;
    b.set_tag(static_cast<std::uint16_t>(li + 1));
    LayerParams params;
    if (mode == LowerMode::Variable) params = declare_params(b, l, li);
    const int n_rf = s.receptive_field();

    if (s.kind == LayerKind::BinConv) {
      const int h = shape.height, w = shape.width;
      const int ry = s.kh / 2, rx = s.kw / 2;
      std::vector<NodeId> out(static_cast<std::size_t>(s.out_maps) * h * w);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          for (int mp = 0; mp < s.out_maps; ++mp) {
            operands.clear();
            int i = 0;
            for (int c = 0; c < s.in_maps; ++c)
              for (int ky = 0; ky < s.kh; ++ky)
                for (int kx = 0; kx < s.kw; ++kx, ++i) {
                  const int yy = y + ky - ry, xx = x + kx - rx;
                  const bool inside = yy >= 0 && yy < h && xx >= 0 && xx < w;
                  const NodeId src =
                      inside ? cur[(static_cast<std::size_t>(c) * h + yy) * w + xx] : pad;
                  operands.push_back(product(b, mode, l, params, mp, i, src));
                }
            Bus phi = build_popcount_tree(b, operands);
            out[(static_cast<std::size_t>(mp) * h + y) * w + x] = binarize(b, mode, l, params, mp, phi);
          }
      shape.channels = s.out_maps;
      if (s.pool == Pool::Or2x2) {
        const int ph = h / 2, pw = w / 2;
        std::vector<NodeId> pooled(static_cast<std::size_t>(s.out_maps) * ph * pw);
        for (int mp = 0; mp < s.out_maps; ++mp)
          for (int y = 0; y < ph; ++y)
            for (int x = 0; x < pw; ++x) {
              auto at = [&](int yy, int xx) { return out[(static_cast<std::size_t>(mp) * h + yy) * w + xx]; };
              pooled[(static_cast<std::size_t>(mp) * ph + y) * pw + x] =
                  b.or2(b.or2(at(2 * y, 2 * x), at(2 * y, 2 * x + 1)),
                        b.or2(at(2 * y + 1, 2 * x), at(2 * y + 1, 2 * x + 1)));
            }
        out = std::move(pooled);
        shape.height = ph;
        shape.width = pw;
      }
      cur = std::move(out);
    } else {
      std::vector<NodeId> out;
      for (int mp = 0; mp < s.out_maps; ++mp) {
        operands.clear();
        for (int i = 0; i < n_rf; ++i) operands.push_back(product(b, mode, l, params, mp, i, cur[i]));
        Bus phi = build_popcount_tree(b, operands);
        if (s.binarize_output) {
          out.push_back(binarize(b, mode, l, params, mp, phi));
        } else {
          for (std::size_t bit = 0; bit < phi.size(); ++bit)
            b.add_output("score_" + std::to_string(mp) + "_" + std::to_string(bit), phi[bit]);
        }
      }
      shape = Shape{1, 1, s.out_maps};
      cur = std::move(out);
    }
  }
  return std::move(b).finish();
}

std::vector<std::string> input_names(const BnnModel& m, LowerMode mode) {
  std::vector<std::string> names;
  for (int c = 0; c < m.input.channels; ++c)
    for (int y = 0; y < m.input.height; ++y)
      for (int x = 0; x < m.input.width; ++x)
        names.push_back("x_" + std::to_string(c) + "_" + std::to_string(y) + "_" + std::to_string(x));
  if (mode == LowerMode::Fixed) return names;
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const LayerSpec& s = m.layers[li].spec;
    const int n_rf = s.receptive_field();
    const int tw = popcount_width(n_rf);
    for (int mp = 0; mp < s.out_maps; ++mp) {
      for (int i = 0; i < n_rf; ++i) names.push_back(pname("w", li, mp) + "_" + std::to_string(i));
      for (int i = 0; i < tw; ++i) names.push_back(pname("t", li, mp) + "_" + std::to_string(i));
      names.push_back(pname("sel", li, mp));
      names.push_back(pname("cst", li, mp));
    }
  }
  return names;
}

std::vector<std::string> output_names(const BnnModel& m) {
  std::vector<std::string> names;
  const LayerSpec& s = m.layers.back().spec;
  const int w = score_width(m);
  for (int mp = 0; mp < s.out_maps; ++mp)
    for (int bit = 0; bit < w; ++bit)
      names.push_back("score_" + std::to_string(mp) + "_" + std::to_string(bit));
  return names;
}

std::vector<std::uint8_t> parameter_values(const BnnModel& m) {
  std::vector<std::uint8_t> v;
  for (const Layer& l : m.layers) {
    const int tw = popcount_width(l.spec.receptive_field());
    for (const NeuronParams& n : l.neurons) {
      v.insert(v.end(), n.weights.begin(), n.weights.end());
      const bool is_const = n.sign == Compare::Const0 || n.sign == Compare::Const1;
      const unsigned t = is_const ? 0u : static_cast<unsigned>(n.thresh);
      for (int i = 0; i < tw; ++i) v.push_back((t >> i) & 1u);
      v.push_back(n.sign == Compare::Leq || n.sign == Compare::Const1);
      v.push_back(is_const);
    }
  }
  return v;
}

int score_width(const BnnModel& m) { return popcount_width(m.layers.back().spec.receptive_field()); }

std::vector<int> decode_scores(const BnnModel& m, std::span<const std::uint8_t> outputs) {
  const int classes = m.layers.back().spec.out_maps;
  const int w = score_width(m);
  if (outputs.size() != static_cast<std::size_t>(classes) * w)
    throw ShapeError("expected " + std::to_string(classes * w) + " output bits, got " +
                     std::to_string(outputs.size()));
  std::vector<int> scores(static_cast<std::size_t>(classes));
  for (int c = 0; c < classes; ++c)
    for (int bit = 0; bit < w; ++bit)
      if (outputs[static_cast<std::size_t>(c) * w + bit]) scores[c] |= 1 << bit;
  return scores;
}

}  // namespace bnnc
