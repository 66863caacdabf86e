// Regenerates the bundled models under models/.
//
// Parameters are random but shaped like a trained network: per-neuron batch
// norm statistics centred on the expected popcount, mostly positive gamma,
// a few negative and a few exactly zero. They are folded to integer
// thresholds on load and written back in canonical form.
//
//   make_fixtures <output-dir>

#include <cmath>
#include <fstream>
#include <iostream>
#include <random>

#include <json.hpp>

#include "bnnc/costmodel.hpp"
#include "bnnc/model_ir.hpp"

namespace {

using nlohmann::json;

json random_model(const bnnc::Topology& t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  json j;
  j["name"] = t.name;
  j["input"] = {{"height", t.input.height}, {"width", t.input.width}, {"channels", t.input.channels}};
  json layers = json::array();
  for (const bnnc::LayerSpec& s : t.layers) {
    json l;
    if (s.kind == bnnc::LayerKind::BinConv) {
      l = {{"type", "binconv"}, {"kh", s.kh}, {"kw", s.kw}, {"padding", "same"},
           {"pool", s.pool == bnnc::Pool::Or2x2 ? "or2x2" : "none"}};
    } else {
      l = {{"type", "binfc"}, {"binarize_output", s.binarize_output}};
    }
    l["in_maps"] = s.in_maps;
    l["out_maps"] = s.out_maps;
    const int n_rf = s.receptive_field();
    const double spread = std::sqrt(static_cast<double>(n_rf)) / 2.0;
    json neurons = json::array();
    for (int m = 0; m < s.out_maps; ++m) {
      std::string w(static_cast<std::size_t>(n_rf), '0');
      for (auto& c : w) c = (rng() & 1) ? '1' : '0';
      const double g = unit(rng);
      double gamma = g < 0.02 ? 0.0 : (g < 0.12 ? -1.0 : 1.0) * (0.5 + unit(rng));
      json bn = {{"mu", n_rf / 2.0 + spread * normal(rng)},
                 {"gamma", gamma},
                 {"sigma", spread * (0.5 + unit(rng))},
                 {"beta", 0.5 * normal(rng)},
                 {"bias", 0.5 * normal(rng)}};
      neurons.push_back({{"weights", w}, {"batchnorm", bn}});
    }
    l["neurons"] = neurons;
    layers.push_back(l);
  }
  j["layers"] = layers;
  return j;
}

bnnc::Topology micro_topology() {
  bnnc::LayerSpec conv;
  conv.kind = bnnc::LayerKind::BinConv;
  conv.kh = conv.kw = 3;
  conv.in_maps = 1;
  conv.out_maps = 2;
  conv.pool = bnnc::Pool::Or2x2;
  bnnc::LayerSpec fc;
  fc.kind = bnnc::LayerKind::BinFc;
  fc.in_maps = 8;
  fc.out_maps = 2;
  fc.binarize_output = false;
  return {"micro", {4, 4, 1}, {conv, fc}};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <output-dir>\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  const std::pair<bnnc::Topology, std::uint64_t> models[] = {
      {bnnc::reference_topology("bnn16"), 16},
      {bnnc::reference_topology("bnn32"), 32},
      {micro_topology(), 4},
  };
  for (const auto& [topo, seed] : models) {
    bnnc::BnnModel m = bnnc::load_model(random_model(topo, seed).dump());
    std::ofstream out(dir / (topo.name + ".json"), std::ios::binary);
    out << bnnc::save_model(m);
    std::cout << "wrote " << (dir / (topo.name + ".json")).string() << "\n";
  }
  return 0;
}
