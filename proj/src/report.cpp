#include "bnnc/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "bnnc/error.hpp"

namespace bnnc {

namespace {

using nlohmann::json;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pad_left(std::string s, std::size_t w) {
  if (s.size() < w) s.insert(0, w - s.size(), ' ');
  return s;
}

std::string pad_right(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

// Aligned text table; the first `left` columns are left-aligned.
class Table {
 public:
  explicit Table(std::vector<std::string> header, std::size_t left = 1) : left_(left) {
    rows_.push_back(std::move(header));
  }
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  std::string str(const std::string& indent = "  ") const {
    std::vector<std::size_t> w;
    for (const auto& r : rows_)
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (w.size() <= i) w.push_back(0);
        w[i] = std::max(w[i], r[i].size());
      }
    std::string out;
    for (const auto& r : rows_) {
      std::string line = indent;
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) line += "  ";
        line += i < left_ ? pad_right(r[i], w[i]) : pad_left(r[i], w[i]);
      }
      while (!line.empty() && line.back() == ' ') line.pop_back();
      out += line + "\n";
    }
    return out;
  }

 private:
  std::size_t left_;
  std::vector<std::vector<std::string>> rows_;
};

double percent(double part, double whole) { return whole > 0.0 ? 100.0 * part / whole : 0.0; }

std::string layer_label(const LayerSpec& s) {
  if (s.kind == LayerKind::BinFc) return "binfc";
  std::string l = "binconv" + std::to_string(s.kh) + "x" + std::to_string(s.kw);
  if (s.pool == Pool::Or2x2) l += "+or2x2";
  return l;
}

std::vector<Shape> shapes_in(const Topology& t) {
  std::vector<Shape> in{t.input};
  auto out = layer_shapes(t);
  in.insert(in.end(), out.begin(), out.end() - 1);
  return in;
}

json shape_json(const Shape& s) { return {{"height", s.height}, {"width", s.width}, {"channels", s.channels}}; }

json gate_stats_json(const GateStats& s) {
  json counts = json::object();
  for (std::size_t i = 0; i < kGateTypeCount; ++i) {
    const auto t = static_cast<GateType>(i);
    if (t == GateType::Input || t == GateType::Const0 || t == GateType::Const1) continue;
    counts[std::string(to_string(t))] = s.count[i];
  }
  return {{"inputs", s.inputs}, {"constants", s.constants}, {"logic_gates", s.logic_gates}, {"by_type", counts}};
}

std::string gate_stats_text(const GateStats& s) {
  std::string out = "  inputs " + std::to_string(s.inputs) + ", constants " + std::to_string(s.constants) +
                    ", logic gates " + std::to_string(s.logic_gates) + "\n";
  Table t({"type", "count"});
  for (std::size_t i = 0; i < kGateTypeCount; ++i) {
    const auto g = static_cast<GateType>(i);
    if (g == GateType::Input || g == GateType::Const0 || g == GateType::Const1) continue;
    t.add({std::string(to_string(g)), std::to_string(s.count[i])});
  }
  return out + t.str("    ");
}

std::string frame_string(const BinaryFrame& f) { return bits_to_string(f.bits); }

json ints_json(const std::vector<int>& v) { return json(v); }

std::string ints_text(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

OutputFormat parse_output_format(std::string_view s) {
  if (s == "text") return OutputFormat::Text;
  if (s == "json") return OutputFormat::Json;
  throw ConfigError("unknown output format \"" + std::string(s) + "\" (expected text or json)");
}

json estimate_json(const Topology& t, const TechLibrary& tech) {
  const AreaEstimate est = estimate_model_area(t, tech);
  const auto ops = op_count_per_layer(t);
  const auto bits = param_footprint_per_layer(t);
  const auto in = shapes_in(t);
  const long long total_ops = op_count(t);
  json layers = json::array();
  for (std::size_t i = 0; i < t.layers.size(); ++i) {
    const LayerArea& a = est.layers[i];
    layers.push_back({{"index", i + 1},
                      {"type", layer_label(t.layers[i])},
                      {"input_shape", shape_json(in[i])},
                      {"n_out", a.n_out},
                      {"n_rf", a.n_rf},
                      {"ops", ops[i]},
                      {"ops_share", percent(static_cast<double>(ops[i]), static_cast<double>(total_ops)) / 100.0},
                      {"xnor_mm2", a.xnor_um2 * 1e-6},
                      {"ha_mm2", a.ha_um2 * 1e-6},
                      {"fa_mm2", a.fa_um2 * 1e-6},
                      {"estimated_mm2", a.total_mm2()},
                      {"param_bits", bits[i]}});
  }
  return {{"model", t.name},
          {"input_shape", shape_json(t.input)},
          {"layers", layers},
          {"total_ops", total_ops},
          {"total_estimated_mm2", est.total_mm2()},
          {"total_estimated_ge", est.total_ge},
          {"total_param_bits", param_footprint(t)}};
}

std::string estimate_text(const Topology& t, const TechLibrary& tech) {
  const AreaEstimate est = estimate_model_area(t, tech);
  const auto ops = op_count_per_layer(t);
  const auto bits = param_footprint_per_layer(t);
  const auto in = shapes_in(t);
  const long long total_ops = op_count(t);
  std::ostringstream os;
  os << "estimate: " << t.name << " (input " << to_string(t.input) << ", " << t.layers.size() << " layers)\n";
  Table tab({"layer", "type", "input", "N_out", "N_RF", "compute[kOp]", "share", "xnor[mm2]", "ha[mm2]",
             "fa[mm2]", "estim[mm2]", "params[bit]"},
            2);
  for (std::size_t i = 0; i < t.layers.size(); ++i) {
    const LayerArea& a = est.layers[i];
    tab.add({std::to_string(i + 1), layer_label(t.layers[i]), to_string(in[i]), std::to_string(a.n_out),
             std::to_string(a.n_rf), fmt("%.0f", static_cast<double>(ops[i]) / 1e3),
             fmt("%.1f%%", percent(static_cast<double>(ops[i]), static_cast<double>(total_ops))),
             fmt("%.4f", a.xnor_um2 * 1e-6), fmt("%.4f", a.ha_um2 * 1e-6), fmt("%.4f", a.fa_um2 * 1e-6),
             fmt("%.3f", a.total_mm2()), std::to_string(bits[i])});
  }
  os << tab.str();
  os << "  total: " << total_ops << " Op (" << fmt("%.2f", static_cast<double>(total_ops) / 1e6) << " MOp), "
     << fmt("%.3f", est.total_mm2()) << " mm2 (" << fmt("%.3f", est.total_ge / 1e6) << " MGE), "
     << param_footprint(t) << " parameter bits (" << fmt("%.0f", static_cast<double>(param_footprint(t)) / 1e3)
     << " kbit)\n";
  return os.str();
}

json extrapolation_json(const TechLibrary& tech) {
  json models = json::array();
  double a32 = 0.0, a64 = 0.0;
  for (const char* name : {"bnn16", "bnn32", "bnn64"}) {
    const Topology t = reference_topology(name);
    const AreaEstimate e = estimate_model_area(t, tech);
    if (t.name == "bnn32") a32 = e.total_mm2();
    if (t.name == "bnn64") a64 = e.total_mm2();
    models.push_back({{"model", t.name},
                      {"input_shape", shape_json(t.input)},
                      {"layers", t.layers.size()},
                      {"total_ops", op_count(t)},
                      {"estimated_mm2", e.total_mm2()},
                      {"param_bits", param_footprint(t)}});
  }
  return {{"models", models}, {"area_ratio_64_over_32", a32 > 0.0 ? a64 / a32 : 0.0}};
}

std::string extrapolation_text(const TechLibrary& tech) {
  const json j = extrapolation_json(tech);
  std::ostringstream os;
  os << "extrapolation (analytical estimate; the 64x64 topology is an assumed 5 conv + 2 fc network)\n";
  Table tab({"model", "input", "layers", "compute[MOp]", "estim[mm2]", "params[bit]"});
  for (const json& m : j["models"]) {
    const json& s = m["input_shape"];
    tab.add({m["model"].get<std::string>(),
             std::to_string(s["height"].get<int>()) + "x" + std::to_string(s["width"].get<int>()) + "x" +
                 std::to_string(s["channels"].get<int>()),
             std::to_string(m["layers"].get<std::size_t>()),
             fmt("%.2f", static_cast<double>(m["total_ops"].get<long long>()) / 1e6),
             fmt("%.3f", m["estimated_mm2"].get<double>()), std::to_string(m["param_bits"].get<long long>())});
  }
  os << tab.str();
  os << "  area ratio 64x64 / 32x32: " << fmt("%.2f", j["area_ratio_64_over_32"].get<double>()) << "\n";
  return os.str();
}

json stats_json(const Netlist& n, const TechLibrary& tech, long long ops) {
  const GateStats s = stats(n);
  const MeasuredArea a = measured_area(s, tech);
  json j = gate_stats_json(s);
  j["outputs"] = n.outputs().size();
  j["area_um2"] = a.um2;
  j["area_mm2"] = a.mm2();
  j["area_ge"] = a.ge;
  if (ops > 0) {
    j["ops"] = ops;
    j["ge_per_op"] = ge_per_op(a, ops);
  }
  return j;
}

std::string stats_text(const Netlist& n, const TechLibrary& tech, long long ops) {
  const GateStats s = stats(n);
  const MeasuredArea a = measured_area(s, tech);
  std::ostringstream os;
  os << "netlist: " << n.size() << " nodes, " << n.outputs().size() << " outputs\n" << gate_stats_text(s);
  os << "  area: " << fmt("%.1f", a.um2) << " um2 = " << fmt("%.4f", a.mm2()) << " mm2 = " << fmt("%.0f", a.ge)
     << " GE\n";
  if (ops > 0) os << "  GE/Op: " << fmt("%.3f", ge_per_op(a, ops)) << " (" << ops << " Op)\n";
  return os.str();
}

json pass_reports_json(const std::vector<PassReport>& reports) {
  json arr = json::array();
  for (const PassReport& r : reports)
    arr.push_back({{"pass", r.pass},
                   {"gates_before", r.before.logic_gates},
                   {"gates_after", r.after.logic_gates},
                   {"nodes_removed", r.nodes_removed},
                   {"nodes_merged", r.nodes_merged},
                   {"folds", r.folds},
                   {"after", gate_stats_json(r.after)}});
  return arr;
}

json toggle_json(const ToggleProfile& p) {
  json depth = json::array();
  for (std::size_t d = 0; d < p.per_depth.size(); ++d)
    if (p.nodes_per_depth[d] > 0)
      depth.push_back({{"depth", d}, {"nodes", p.nodes_per_depth[d]}, {"toggles", p.per_depth[d]}});
  json j = {{"transitions", p.transitions}, {"total_toggles", p.total}, {"per_depth", depth}};
  if (!p.per_tag.empty()) {
    json tags = json::array();
    for (std::size_t t = 0; t < p.per_tag.size(); ++t)
      if (p.nodes_per_tag[t] > 0)
        tags.push_back({{"layer", t}, {"nodes", p.nodes_per_tag[t]}, {"toggles", p.per_tag[t]}});
    j["per_layer"] = tags;
  }
  return j;
}

json equivalence_json(const EquivResult& r) {
  json j = {{"result", r.pass ? "PASS" : "FAIL"}, {"vectors", r.vectors}};
  if (r.counterexample) {
    const Counterexample& c = *r.counterexample;
    j["counterexample"] = {{"index", c.index},
                           {"frame", frame_string(c.frame)},
                           {"expected_scores", ints_json(c.expected)},
                           {"actual_scores", ints_json(c.actual)}};
  }
  return j;
}

std::string equivalence_text(const EquivResult& r) {
  std::string s = std::string(r.pass ? "PASS" : "FAIL") + ": " + std::to_string(r.vectors) + " vectors checked\n";
  if (r.counterexample) {
    const Counterexample& c = *r.counterexample;
    s += "  counterexample #" + std::to_string(c.index) + "\n";
    s += "  frame    " + frame_string(c.frame) + "\n";
    s += "  expected " + ints_text(c.expected) + "\n";
    s += "  actual   " + ints_text(c.actual) + "\n";
  }
  return s;
}

ModeSummary summarize_mode(const BnnModel& m, LowerMode mode, const TechLibrary& tech,
                           const ReportOptions& opts) {
  ModeSummary s;
  s.mode = mode;
  Netlist n = lower_model(m, mode);
  s.lowered = stats(n);
  auto [opt, passes] = optimize(std::move(n), opts.pipeline);
  s.passes = std::move(passes);
  s.optimized = stats(opt);
  s.area = measured_area(s.optimized, tech);
  s.area_by_layer = measured_area_by_tag(opt, tech);
  s.ge_per_op = ge_per_op(s.area, op_count(m));
  s.verify = check_equivalence(opt, m, mode, opts.verify, opts.threads);
  StimuliSet stim;
  for (const BinaryFrame& f : random_frames(m.input, opts.toggle_frames, opts.toggle_seed))
    stim.push_back(stimulus_for(m, mode, f));
  s.toggles = toggle_profile(opt, stim);
  return s;
}

namespace {

json mode_json(const ModeSummary& s) {
  json layers = json::array();
  double total = s.area.um2;
  for (std::size_t t = 1; t < s.area_by_layer.size(); ++t)
    layers.push_back({{"layer", t},
                      {"area_mm2", s.area_by_layer[t].mm2()},
                      {"area_ge", s.area_by_layer[t].ge},
                      {"share", percent(s.area_by_layer[t].um2, total) / 100.0}});
  return {{"mode", std::string(to_string(s.mode))},
          {"lowered", gate_stats_json(s.lowered)},
          {"optimized", gate_stats_json(s.optimized)},
          {"passes", pass_reports_json(s.passes)},
          {"area_mm2", s.area.mm2()},
          {"area_ge", s.area.ge},
          {"ge_per_op", s.ge_per_op},
          {"layers", layers},
          {"verify", equivalence_json(s.verify)},
          {"toggles", toggle_json(s.toggles)}};
}

std::string mode_text(const ModeSummary& s, const ReportOptions& opts) {
  std::ostringstream os;
  os << "mode " << to_string(s.mode) << "\n";
  os << " lowered:\n" << gate_stats_text(s.lowered);
  os << " optimized:\n" << gate_stats_text(s.optimized);
  os << " passes:\n";
  std::istringstream passes(format_pass_reports(s.passes));
  for (std::string line; std::getline(passes, line);) os << "  " << line << "\n";
  os << " area: " << fmt("%.4f", s.area.mm2()) << " mm2 = " << fmt("%.3f", s.area.ge / 1e6) << " MGE, "
     << fmt("%.3f", s.ge_per_op) << " GE/Op\n";
  os << " verify (";
  if (opts.verify.kind == EquivStrategy::Kind::Exhaustive)
    os << "exhaustive";
  else
    os << "random " << opts.verify.count << ", seed " << opts.verify.seed;
  os << "): " << equivalence_text(s.verify);
  os << " " << format_toggle_report(s.toggles);
  return os.str();
}

}  // namespace

std::string render_report(const BnnModel& m, const TechLibrary& tech, const ReportOptions& opts,
                          OutputFormat format) {
  const Topology topo = topology_of(m);
  const ModeSummary fixed = summarize_mode(m, LowerMode::Fixed, tech, opts);
  const ModeSummary variable = summarize_mode(m, LowerMode::Variable, tech, opts);
  const AreaEstimate est = estimate_model_area(topo, tech);
  const auto ops = op_count_per_layer(topo);
  const long long total_ops = op_count(topo);
  auto layer_area = [](const ModeSummary& s, std::size_t layer) {
    return layer < s.area_by_layer.size() ? s.area_by_layer[layer] : MeasuredArea{};
  };
  const double gate_ratio = fixed.optimized.logic_gates > 0
                                ? static_cast<double>(variable.optimized.logic_gates) /
                                      static_cast<double>(fixed.optimized.logic_gates)
                                : 0.0;
  const double ge_ratio = fixed.area.ge > 0.0 ? variable.area.ge / fixed.area.ge : 0.0;

  if (format == OutputFormat::Json) {
    json layers = json::array();
    for (std::size_t i = 0; i < topo.layers.size(); ++i)
      layers.push_back({{"layer", i + 1},
                        {"ops", ops[i]},
                        {"estimated_mm2", est.layers[i].total_mm2()},
                        {"fixed_mm2", layer_area(fixed, i + 1).mm2()},
                        {"variable_mm2", layer_area(variable, i + 1).mm2()}});
    json j = {{"format_version", kReportFormatVersion},
              {"model", m.name},
              {"estimate", estimate_json(topo, tech)},
              {"comparison", layers},
              {"fixed", mode_json(fixed)},
              {"variable", mode_json(variable)},
              {"variable_over_fixed", {{"gates", gate_ratio}, {"ge", ge_ratio}}},
              {"extrapolation", extrapolation_json(tech)}};
    return j.dump(1) + "\n";
  }

  std::ostringstream os;
  os << "bnnc report, format_version " << kReportFormatVersion << "\n";
  os << "model " << m.name << "\n\n";
  os << estimate_text(topo, tech) << "\n";
  os << "per-layer area (measured after optimization)\n";
  Table tab({"layer", "compute[kOp]", "share", "estim[mm2]", "fixed[mm2]", "share", "variable[mm2]", "share"});
  for (std::size_t i = 0; i < topo.layers.size(); ++i) {
    const MeasuredArea f = layer_area(fixed, i + 1), v = layer_area(variable, i + 1);
    tab.add({std::to_string(i + 1), fmt("%.0f", static_cast<double>(ops[i]) / 1e3),
             fmt("%.1f%%", percent(static_cast<double>(ops[i]), static_cast<double>(total_ops))),
             fmt("%.3f", est.layers[i].total_mm2()), fmt("%.3f", f.mm2()),
             fmt("%.1f%%", percent(f.um2, fixed.area.um2)), fmt("%.3f", v.mm2()),
             fmt("%.1f%%", percent(v.um2, variable.area.um2))});
  }
  tab.add({"total", fmt("%.0f", static_cast<double>(total_ops) / 1e3), "100.0%", fmt("%.3f", est.total_mm2()),
           fmt("%.3f", fixed.area.mm2()), "100.0%", fmt("%.3f", variable.area.mm2()), "100.0%"});
  os << tab.str() << "\n";
  os << mode_text(fixed, opts) << "\n" << mode_text(variable, opts) << "\n";
  os << "variable / fixed: " << fmt("%.2f", gate_ratio) << "x gates, " << fmt("%.2f", ge_ratio) << "x GE\n\n";
  os << extrapolation_text(tech);
  return os.str();
}

}  // namespace bnnc
