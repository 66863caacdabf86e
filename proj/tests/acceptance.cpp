// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "bnnc/costmodel.hpp"
#include "bnnc/gatesim.hpp"
#include "bnnc/lowering.hpp"
#include "bnnc/optimize.hpp"
#include "support.hpp"

using namespace bnnc;
namespace fs = std::filesystem;

namespace {

std::map<int, std::pair<bool, std::string>> verdicts;

void verdict(int id, bool ok, const std::string& what) {
  std::fprintf(stderr, "[criterion %d done]\n", id);
  verdicts[id] = {ok, what};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void ops_and_footprint() {
  const auto per = op_count_per_layer(reference_topology("bnn16"));
  const long long want_kop[] = {74, 590, 442, 25};
  bool ok = per.size() == 5;
  for (int i = 0; ok && i < 4; ++i) ok = std::llround(per[i] / 1e3) == want_kop[i];
  const long long t16 = op_count(reference_topology("bnn16")), t32 = op_count(reference_topology("bnn32"));
  ok = ok && std::llround(t16 / 1e4) == 113 && std::llround(t32 / 1e4) == 534;
  verdict(1, ok,
          fmt("op counts [%lld, %lld, %lld, %lld] Op; totals %lld (%.2f MOp) and %lld (%.2f MOp)", per[0], per[1],
              per[2], per[3], t16, t16 / 1e6, t32, t32 / 1e6));

  const long long p16 = param_footprint(reference_topology("bnn16")),
                  p32 = param_footprint(reference_topology("bnn32"));
  verdict(2, p16 == 32740 && p32 == 65252, fmt("parameter bits %lld and %lld", p16, p32));
}

void area_estimate() {
  const AreaEstimate e = estimate_model_area(reference_topology("bnn16"), TechLibrary::gf22_defaults());
  const double expected[] = {0.093, 0.971, 0.738, 0.041};
  bool ok = true;
  std::string got;
  for (int i = 0; i < 4; ++i) {
    const double a = e.layers[i].total_mm2();
    ok = ok && std::abs(a - expected[i]) <= 0.01 * expected[i];
    got += fmt("%s%.4f", i ? ", " : "", a);
  }
  const double xnor = e.layers[0].xnor_um2 * 1e-6;
  ok = ok && std::abs(xnor - 0.027) <= 0.02 * 0.027;
  verdict(3, ok, "layer areas [" + got + "] mm2, layer 1 XNOR " + fmt("%.4f mm2", xnor));
}

bool fires(const BatchNormParams& p, int phi) { return p.gamma * (phi + p.bias - p.mu) / p.sigma + p.beta >= 0.0; }

bool applies(Threshold t, int phi) {
  switch (t.sign) {
    case Compare::Geq: return phi >= t.thresh;
    case Compare::Leq: return phi <= t.thresh;
    case Compare::Const1: return true;
    case Compare::Const0: return false;
  }
  return false;
}

void threshold_fold() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  long long mismatches = 0, params = 0, zero_gamma = 0, out_of_range = 0;
  for (int n_rf : {9, 144, 288, 432}) {
    for (int k = 0; k < 10000; ++k) {
      BatchNormParams p;
      // crossings span well beyond [0, n_rf] on both sides
      p.mu = (u(rng) * 2.0 - 0.5) * n_rf;
      const double g = u(rng);
      p.gamma = g < 0.05 ? 0.0 : (g < 0.5 ? -1 : 1) * (0.001 + 4 * u(rng));
      p.sigma = 0.001 + 8 * u(rng);
      p.beta = (u(rng) - 0.5) * 6;
      p.bias = (u(rng) - 0.5) * 6;
      if (k % 5 == 0) p.mu = std::round(p.mu), p.beta = 0, p.bias = std::round(p.bias);
      const Threshold t = derive_threshold(p, n_rf);
      ++params;
      zero_gamma += p.gamma == 0.0;
      out_of_range += t.sign == Compare::Const0 || t.sign == Compare::Const1;
      for (int phi = 0; phi <= n_rf; ++phi) mismatches += applies(t, phi) != fires(p, phi);
    }
  }
  verdict(8, mismatches == 0 && zero_gamma > 0 && out_of_range > zero_gamma,
          fmt("%lld params per-phi checked, %lld with gamma=0, %lld constant, %lld mismatches, %.2f s", params,
              zero_gamma, out_of_range, mismatches, seconds_since(t0)));
}

void sharing() {
  std::size_t worst = 0, groups = 0;
  bool ok = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto [opt, reports] = optimize(testing::sharing_construction(seed), Pipeline::o2());
    for (const auto& g : testing::first_level_sharing(opt)) {
      ++groups;
      worst = std::max(worst, g.subcircuits());
      ok = ok && g.subcircuits() <= 4;
    }
  }
  verdict(6, ok && groups == 80,
          fmt("16 popcounts over 8 inputs, 20 weight draws: at most %zu first-level subcircuits per pair group", worst));
}

bool has_const_operand(const Netlist& n) {
  for (const Node& node : n.nodes())
    for (NodeId op : node.operands())
      if (n.node(op).type == GateType::Const0 || n.node(op).type == GateType::Const1) return true;
  return false;
}

struct ModeResult {
  std::size_t gates = 0;
  double ge = 0;
  bool verified = false;
  std::size_t xnor = 0;
  bool const_ops = false;
};

// Criteria 4, 5 and 7 share the lowered and optimized netlists.
void fixtures() {
  const TechLibrary tech = TechLibrary::gf22_defaults();

  auto t0 = std::chrono::steady_clock::now();
  const BnnModel micro = load_model_file(testing::model_path("micro"));
  auto [mn, mr] = optimize(lower_model(micro, LowerMode::Fixed), Pipeline::o2());
  const EquivResult ex = check_equivalence(mn, micro, LowerMode::Fixed, EquivStrategy::exhaustive());
  const double t_micro = seconds_since(t0);
  bool c4 = ex.pass && ex.vectors == 65536 && t_micro < 60;
  std::string c4_text = fmt("micro exhaustive %zu vectors %s in %.2f s", ex.vectors, ex.pass ? "match" : "MISMATCH",
                            t_micro);

  std::map<std::string, std::map<LowerMode, ModeResult>> results;
  double t_random = 0;
  for (const char* name : {"bnn16", "bnn32"}) {
    const BnnModel m = load_model_file(testing::model_path(name));
    for (LowerMode mode : {LowerMode::Fixed, LowerMode::Variable}) {
      auto [n, reports] = optimize(lower_model(m, mode), Pipeline::o2());
      const GateStats s = stats(n);
      ModeResult& r = results[name][mode];
      r.gates = s.logic_gates;
      r.ge = measured_area(s, tech).ge;
      r.xnor = s.of(GateType::Xnor2);
      r.const_ops = has_const_operand(n);
      t0 = std::chrono::steady_clock::now();
      r.verified = check_equivalence(n, m, mode, EquivStrategy::random(1000, 42)).pass;
      t_random += seconds_since(t0);
      c4 = c4 && r.verified;
      c4_text += fmt("; %s %s 1000 random %s", name, std::string(to_string(mode)).c_str(),
                     r.verified ? "match" : "MISMATCH");
    }
  }
  c4 = c4 && t_random < 300;
  verdict(4, c4, c4_text + fmt(" (random checks %.1f s)", t_random));

  bool c5 = true;
  std::string c5_text;
  for (const auto& [name, modes] : results) {
    const ModeResult& f = modes.at(LowerMode::Fixed);
    c5 = c5 && f.xnor == 0 && !f.const_ops;
    c5_text += fmt("%s%s fixed O2: %zu XNOR2, %s constant operands", c5_text.empty() ? "" : "; ", name.c_str(),
                   f.xnor, f.const_ops ? "has" : "no");
  }
  verdict(5, c5, c5_text);

  bool c7 = true;
  std::string c7_text;
  const std::map<std::string, double> reference = {{"bnn16", 2.5}, {"bnn32", 2.2}};
  for (const auto& [name, modes] : results) {
    const ModeResult& f = modes.at(LowerMode::Fixed);
    const ModeResult& v = modes.at(LowerMode::Variable);
    const double rg = static_cast<double>(v.gates) / static_cast<double>(f.gates), ra = v.ge / f.ge;
    c7 = c7 && f.gates < v.gates && f.ge < v.ge && rg >= 1.5 && ra >= 1.5;
    c7_text += fmt("%s%s variable/fixed %.2fx gates (%zu/%zu), %.2fx GE (synthesized context %.1fx)",
                   c7_text.empty() ? "" : "; ", name.c_str(), rg, v.gates, f.gates, ra, reference.at(name));
  }
  verdict(7, c7, c7_text);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool run(const std::string& args) {
  const std::string cmd = "\"" BNNC_CLI "\" " + args + " >/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) && WEXITSTATUS(status) == 0;
}

void determinism() {
  const fs::path dir = fs::temp_directory_path() / ("bnnc_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto q = [&](const std::string& f) { return "\"" + (dir / f).string() + "\""; };
  auto same_and_drop = [&](const std::string& a, const std::string& b) {
    const bool eq = fs::exists(dir / a) && fs::file_size(dir / a) > 0 && slurp(dir / a) == slurp(dir / b);
    fs::remove(dir / a);
    fs::remove(dir / b);
    return eq;
  };
  bool ok = true;
  int compared = 0;
  for (const char* name : {"bnn16", "bnn32"}) {
    const std::string model = "\"" + testing::model_path(name).string() + "\"";
    for (const char* mode : {"fixed", "variable"}) {
      for (const char* k : {"a", "b"})
        ok = run(std::string("compile --model ") + model + " --mode " + mode + " --out " + q(std::string(k) + ".net") +
                 " --report " + q(std::string(k) + ".txt")) && ok;
      ok = same_and_drop("a.net", "b.net") && ok;
      ok = same_and_drop("a.txt", "b.txt") && ok;
      compared += 2;
    }
    ok = run("report --model " + model + " --threads 1 --out " + q("r1.txt")) && ok;
    ok = run("report --model " + model + " --threads 4 --out " + q("r4.txt")) && ok;
    ok = same_and_drop("r1.txt", "r4.txt") && ok;
    ++compared;
  }
  fs::remove_all(dir);
  verdict(9, ok, fmt("%d file pairs compared (compile twice per mode, report with 1 and 4 threads)", compared));
}

}  // namespace

int main() {
  ops_and_footprint();
  area_estimate();
  threshold_fold();
  sharing();
  fixtures();
  determinism();
  int failures = 0;
  for (const auto& [id, v] : verdicts) {
    std::printf("criterion %d: %s  %s\n", id, v.first ? "PASS" : "FAIL", v.second.c_str());
    failures += !v.first;
  }
  if (failures)
    std::printf("FAIL: %d of %zu criteria failed\n", failures, verdicts.size());
  else
    std::printf("PASS: all %zu criteria passed\n", verdicts.size());
  return failures ? 1 : 0;
}
