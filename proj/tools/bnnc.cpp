// bnnc: compile binarized networks into gate-level netlists and measure them.
//
//   bnnc compile  --model m.json --mode fixed|variable [--opt O0|O2 | --passes a,b] --out n.net
//   bnnc estimate --model m.json | --topology bnn16|bnn32|bnn64
//   bnnc stats    --netlist n.net [--model m.json]
//   bnnc sim      --netlist n.net --stimuli s.txt [--model m.json] [--toggles t.txt]
//   bnnc verify   --model m.json --netlist n.net [--samples N --seed S | --exhaustive]
//   bnnc report   --model m.json
//
// Exit status: 0 success, 1 verification failure, 2 usage or I/O error.
// The tech library defaults to $BNNC_TECH_LIB, then to the built-in GF22 table.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "bnnc/costmodel.hpp"
#include "bnnc/error.hpp"
#include "bnnc/gatesim.hpp"
#include "bnnc/lowering.hpp"
#include "bnnc/model_ir.hpp"
#include "bnnc/optimize.hpp"
#include "bnnc/report.hpp"

namespace {

using nlohmann::json;

constexpr std::uint64_t kDefaultSeed = 42;
constexpr std::size_t kDefaultSamples = 1000;

struct RunConfig {
  std::string model;
  std::string topology;
  std::string netlist;
  std::string mode = "auto";
  std::string opt = "O2";
  std::string passes;
  std::string stimuli;
  std::string tech;
  std::string format = "text";
  std::string out;
  std::string report_out;
  std::string toggles_out;
  std::uint64_t seed = kDefaultSeed;
  std::size_t samples = kDefaultSamples;
  std::size_t toggle_frames = 100;
  bool exhaustive = false;
  unsigned threads = 1;
};

unsigned resolve_threads(unsigned t) {
  if (t != 0) return t;
  return std::max(1u, std::thread::hardware_concurrency());
}

bnnc::TechLibrary tech_library(const RunConfig& c) {
  if (!c.tech.empty()) return bnnc::load_tech_library(c.tech);
  if (const char* env = std::getenv("BNNC_TECH_LIB"); env && *env) return bnnc::load_tech_library(env);
  return bnnc::TechLibrary::gf22_defaults();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw bnnc::ConfigError("cannot write " + path);
  out << text;
  if (!out) throw bnnc::ConfigError("error writing " + path);
}

std::string json_doc(json body) {
  body["format_version"] = bnnc::kReportFormatVersion;
  return body.dump(1) + "\n";
}

// Without --mode, a netlist with parameter inputs is taken to be VARIABLE.
bnnc::LowerMode netlist_mode(const RunConfig& c, const bnnc::BnnModel& m, const bnnc::Netlist& n) {
  if (c.mode != "auto") return bnnc::parse_lower_mode(c.mode);
  return n.inputs().size() > m.input.size() ? bnnc::LowerMode::Variable : bnnc::LowerMode::Fixed;
}

bnnc::Pipeline pipeline(const RunConfig& c) {
  return bnnc::parse_pipeline(c.passes.empty() ? c.opt : c.passes);
}

int cmd_compile(const RunConfig& c) {
  const bnnc::BnnModel m = bnnc::load_model_file(c.model);
  const bnnc::LowerMode mode = bnnc::parse_lower_mode(c.mode == "auto" ? "fixed" : c.mode);
  auto [n, reports] = bnnc::optimize(bnnc::lower_model(m, mode), pipeline(c));
  bnnc::write_netlist_file(n, c.out);
  const auto fmt = bnnc::parse_output_format(c.format);
  std::string text;
  if (fmt == bnnc::OutputFormat::Json)
    text = json_doc({{"model", m.name},
                     {"mode", std::string(bnnc::to_string(mode))},
                     {"passes", bnnc::pass_reports_json(reports)},
                     {"netlist", bnnc::stats_json(n, tech_library(c), bnnc::op_count(m))}});
  else
    text = "compiled " + m.name + " (" + std::string(bnnc::to_string(mode)) + ")\n" +
           bnnc::format_pass_reports(reports) + bnnc::stats_text(n, tech_library(c), bnnc::op_count(m));
  write_output(c.report_out, text);
  return 0;
}

int cmd_estimate(const RunConfig& c) {
  if (c.model.empty() == c.topology.empty()) throw CLI::ValidationError("estimate needs exactly one of --model or --topology");
  const bnnc::Topology t =
      c.model.empty() ? bnnc::reference_topology(c.topology) : bnnc::topology_of(bnnc::load_model_file(c.model));
  const bnnc::TechLibrary tech = tech_library(c);
  if (bnnc::parse_output_format(c.format) == bnnc::OutputFormat::Json)
    write_output(c.out, json_doc(bnnc::estimate_json(t, tech)));
  else
    write_output(c.out, bnnc::estimate_text(t, tech));
  return 0;
}

int cmd_stats(const RunConfig& c) {
  const bnnc::Netlist n = bnnc::read_netlist_file(c.netlist);
  const long long ops = c.model.empty() ? 0 : bnnc::op_count(bnnc::load_model_file(c.model));
  const bnnc::TechLibrary tech = tech_library(c);
  if (bnnc::parse_output_format(c.format) == bnnc::OutputFormat::Json)
    write_output(c.out, json_doc(bnnc::stats_json(n, tech, ops)));
  else
    write_output(c.out, bnnc::stats_text(n, tech, ops));
  return 0;
}

int cmd_sim(const RunConfig& c) {
  const bnnc::Netlist n = bnnc::read_netlist_file(c.netlist);
  const auto lines = bnnc::read_bit_lines(c.stimuli);
  bnnc::StimuliSet stim;
  if (!c.model.empty()) {
    // Stimuli hold image frames; parameter inputs come from the model.
    const bnnc::BnnModel m = bnnc::load_model_file(c.model);
    const bnnc::LowerMode mode = netlist_mode(c, m, n);
    for (const bnnc::BinaryFrame& f : bnnc::frames_from_lines(lines, m.input))
      stim.push_back(bnnc::stimulus_for(m, mode, f));
  } else {
    stim = lines;
  }
  for (std::size_t i = 0; i < stim.size(); ++i)
    if (stim[i].size() != n.inputs().size())
      throw bnnc::ShapeError(c.stimuli + ": vector " + std::to_string(i + 1) + " has " +
                             std::to_string(stim[i].size()) + " bits, netlist has " +
                             std::to_string(n.inputs().size()) + " inputs");
  const bnnc::StimuliSet outs = bnnc::batch_evaluate(n, stim, resolve_threads(c.threads));
  const bnnc::ToggleProfile prof = bnnc::toggle_profile(n, stim);
  if (bnnc::parse_output_format(c.format) == bnnc::OutputFormat::Json) {
    json o = json::array();
    for (const auto& v : outs) o.push_back(bnnc::bits_to_string(v));
    write_output(c.out, json_doc({{"outputs", o}, {"toggles", bnnc::toggle_json(prof)}}));
    return 0;
  }
  write_output(c.out, bnnc::format_bit_lines(outs));
  if (!c.toggles_out.empty()) write_output(c.toggles_out, bnnc::format_toggle_report(prof));
  return 0;
}

int cmd_verify(const RunConfig& c) {
  const bnnc::BnnModel m = bnnc::load_model_file(c.model);
  const bnnc::Netlist n = bnnc::read_netlist_file(c.netlist);
  const bnnc::LowerMode mode = netlist_mode(c, m, n);
  const bnnc::EquivStrategy s =
      c.exhaustive ? bnnc::EquivStrategy::exhaustive() : bnnc::EquivStrategy::random(c.samples, c.seed);
  const bnnc::EquivResult r = bnnc::check_equivalence(n, m, mode, s, resolve_threads(c.threads));
  if (bnnc::parse_output_format(c.format) == bnnc::OutputFormat::Json)
    write_output(c.out, json_doc(bnnc::equivalence_json(r)));
  else
    write_output(c.out, bnnc::equivalence_text(r));
  return r.pass ? 0 : 1;
}

int cmd_report(const RunConfig& c) {
  const bnnc::BnnModel m = bnnc::load_model_file(c.model);
  bnnc::ReportOptions opts;
  opts.pipeline = pipeline(c);
  opts.verify = c.exhaustive ? bnnc::EquivStrategy::exhaustive() : bnnc::EquivStrategy::random(c.samples, c.seed);
  opts.toggle_frames = c.toggle_frames;
  opts.threads = resolve_threads(c.threads);
  write_output(c.out, bnnc::render_report(m, tech_library(c), opts, bnnc::parse_output_format(c.format)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bnnc: binarized network to gate-level netlist compiler"};
  app.require_subcommand(1);
  RunConfig c;

  auto format = [&](CLI::App* s) {
    s->add_option("--format", c.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  };
  auto tech = [&](CLI::App* s) {
    s->add_option("--tech", c.tech, "tech library file (default: $BNNC_TECH_LIB, then built-in GF22)");
  };
  auto threads = [&](CLI::App* s) { s->add_option("--threads", c.threads, "worker threads, 0 = all cores"); };
  auto opt = [&](CLI::App* s) {
    s->add_option("--opt", c.opt, "O0 or O2")->check(CLI::IsMember({"O0", "O2"}));
    s->add_option("--passes", c.passes, "comma-separated pass list (overrides --opt)");
  };
  auto mode = [&](CLI::App* s) {
    s->add_option("--mode", c.mode, "fixed or variable")->check(CLI::IsMember({"auto", "fixed", "variable"}));
  };
  auto sampling = [&](CLI::App* s) {
    s->add_option("--seed", c.seed, "random vector seed")->capture_default_str();
    s->add_option("--samples", c.samples, "random vector count")->capture_default_str();
    s->add_flag("--exhaustive", c.exhaustive, "enumerate every image (at most 20 input bits)");
  };

  CLI::App* compile = app.add_subcommand("compile", "lower a model and write its netlist");
  compile->add_option("--model", c.model)->required()->check(CLI::ExistingFile);
  compile->add_option("--out", c.out, "netlist output path")->required();
  compile->add_option("--report", c.report_out, "pass report path (default stdout)");
  mode(compile);
  opt(compile);
  format(compile);
  tech(compile);

  CLI::App* estimate = app.add_subcommand("estimate", "analytical area, compute and parameter estimate");
  estimate->add_option("--model", c.model)->check(CLI::ExistingFile);
  estimate->add_option("--topology", c.topology, "bnn16, bnn32 or bnn64");
  estimate->add_option("--out", c.out);
  format(estimate);
  tech(estimate);

  CLI::App* st = app.add_subcommand("stats", "gate counts and measured area of a netlist");
  st->add_option("--netlist", c.netlist)->required()->check(CLI::ExistingFile);
  st->add_option("--model", c.model, "model for GE/Op")->check(CLI::ExistingFile);
  st->add_option("--out", c.out);
  format(st);
  tech(st);

  CLI::App* sim = app.add_subcommand("sim", "simulate a netlist over a stimuli file");
  sim->add_option("--netlist", c.netlist)->required()->check(CLI::ExistingFile);
  sim->add_option("--stimuli", c.stimuli)->required()->check(CLI::ExistingFile);
  sim->add_option("--model", c.model, "treat stimuli as image frames and fill parameters")->check(CLI::ExistingFile);
  sim->add_option("--out", c.out, "output vectors (default stdout)");
  sim->add_option("--toggles", c.toggles_out, "toggle profile path");
  mode(sim);
  format(sim);
  threads(sim);

  CLI::App* verify = app.add_subcommand("verify", "check a netlist against the reference interpreter");
  verify->add_option("--model", c.model)->required()->check(CLI::ExistingFile);
  verify->add_option("--netlist", c.netlist)->required()->check(CLI::ExistingFile);
  verify->add_option("--out", c.out);
  mode(verify);
  sampling(verify);
  format(verify);
  threads(verify);

  CLI::App* report = app.add_subcommand("report", "full report for a model in both modes");
  report->add_option("--model", c.model)->required()->check(CLI::ExistingFile);
  report->add_option("--out", c.out);
  report->add_option("--toggle-frames", c.toggle_frames, "random frames for the toggle profile")->capture_default_str();
  opt(report);
  sampling(report);
  format(report);
  tech(report);
  threads(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*compile) return cmd_compile(c);
    if (*estimate) return cmd_estimate(c);
    if (*st) return cmd_stats(c);
    if (*sim) return cmd_sim(c);
    if (*verify) return cmd_verify(c);
    if (*report) return cmd_report(c);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "bnnc: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "bnnc: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
