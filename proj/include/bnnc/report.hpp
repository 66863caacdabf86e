#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bnnc/costmodel.hpp"
#include "bnnc/gatesim.hpp"
#include "bnnc/lowering.hpp"
#include "bnnc/model_ir.hpp"
#include "bnnc/optimize.hpp"

namespace bnnc {

inline constexpr int kReportFormatVersion = 1;

enum class OutputFormat { Text, Json };
OutputFormat parse_output_format(std::string_view s);

// Table-III style estimate: compute, analytical area, parameter bits per layer.
nlohmann::json estimate_json(const Topology& t, const TechLibrary& tech);
std::string estimate_text(const Topology& t, const TechLibrary& tech);

// Analytical totals of the reference topologies and the 64x64 / 32x32 ratio.
nlohmann::json extrapolation_json(const TechLibrary& tech);
std::string extrapolation_text(const TechLibrary& tech);

nlohmann::json stats_json(const Netlist& n, const TechLibrary& tech, long long ops);
std::string stats_text(const Netlist& n, const TechLibrary& tech, long long ops);

nlohmann::json pass_reports_json(const std::vector<PassReport>& reports);
nlohmann::json toggle_json(const ToggleProfile& p);
nlohmann::json equivalence_json(const EquivResult& r);
std::string equivalence_text(const EquivResult& r);

struct ReportOptions {
  Pipeline pipeline = Pipeline::o2();
  EquivStrategy verify = EquivStrategy::random(1000, 42);
  std::size_t toggle_frames = 100;
  std::uint64_t toggle_seed = 7;
  unsigned threads = 1;
};

// Lowering, optimization, measurement, verification and toggle activity for
// one mode.
struct ModeSummary {
  LowerMode mode = LowerMode::Fixed;
  GateStats lowered;
  GateStats optimized;
  std::vector<PassReport> passes;
  MeasuredArea area;
  std::vector<MeasuredArea> area_by_layer;  // index 0: primary inputs/constants
  double ge_per_op = 0.0;
  EquivResult verify;
  ToggleProfile toggles;
};

ModeSummary summarize_mode(const BnnModel& m, LowerMode mode, const TechLibrary& tech,
                           const ReportOptions& opts);

std::string render_report(const BnnModel& m, const TechLibrary& tech, const ReportOptions& opts,
                          OutputFormat format);

}  // namespace bnnc
