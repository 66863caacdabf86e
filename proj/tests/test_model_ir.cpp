#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bnnc/error.hpp"
#include "bnnc/model_ir.hpp"
#include "support.hpp"

using namespace bnnc;

namespace {

// gamma * (phi + b - mu) / sigma + beta >= 0, evaluated per phi.
bool oracle_fires(const BatchNormParams& p, int phi) {
  return p.gamma * (phi + p.bias - p.mu) / p.sigma + p.beta >= 0.0;
}

bool applies(Threshold t, int phi) {
  switch (t.sign) {
    case Compare::Geq: return phi >= t.thresh;
    case Compare::Leq: return phi <= t.thresh;
    case Compare::Const1: return true;
    case Compare::Const0: return false;
  }
  return false;
}

std::string micro_json() {
  return R"({"name":"t","input":{"height":2,"width":2,"channels":1},"layers":[
    {"type":"binconv","kh":1,"kw":1,"padding":"same","pool":"none","in_maps":1,"out_maps":1,
     "neurons":[{"weights":"1","thresh":1,"sign":"GEQ"}]},
    {"type":"binfc","binarize_output":false,"in_maps":4,"out_maps":2,
     "neurons":[{"weights":"1010","thresh":2,"sign":"GEQ"},
                {"weights":"0110","batchnorm":{"mu":2.5,"gamma":-1,"sigma":1,"beta":0,"bias":0}}]}]})";
}

}  // namespace

TEST_CASE("popcount width") {
  CHECK(popcount_width(1) == 1);
  CHECK(popcount_width(2) == 2);
  CHECK(popcount_width(9) == 4);
  CHECK(popcount_width(64) == 7);
  CHECK(popcount_width(144) == 8);
  CHECK(popcount_width(288) == 9);
  CHECK(popcount_width(432) == 9);
}

TEST_CASE("threshold folding on hand-checked cases") {
  CHECK(derive_threshold({5, 1, 1, 0, 0}, 9) == Threshold{5, Compare::Geq});
  CHECK(derive_threshold({5, -1, 1, 0, 0}, 9) == Threshold{5, Compare::Leq});
  CHECK(derive_threshold({4.5, 2, 3, 0, 0}, 9) == Threshold{5, Compare::Geq});
  CHECK(derive_threshold({4.5, -2, 3, 0, 0}, 9) == Threshold{4, Compare::Leq});
  // beta shifts the crossing by beta * sigma / gamma
  CHECK(derive_threshold({5, 1, 2, 1, 0}, 9) == Threshold{3, Compare::Geq});
  // bias moves phi
  CHECK(derive_threshold({5, 1, 1, 0, 2}, 9) == Threshold{3, Compare::Geq});
  // out of range in either direction
  CHECK(derive_threshold({-3, 1, 1, 0, 0}, 9) == Threshold{0, Compare::Const1});
  CHECK(derive_threshold({30, 1, 1, 0, 0}, 9) == Threshold{0, Compare::Const0});
  CHECK(derive_threshold({30, -1, 1, 0, 0}, 9) == Threshold{0, Compare::Const1});
  CHECK(derive_threshold({-3, -1, 1, 0, 0}, 9) == Threshold{0, Compare::Const0});
  // gamma = 0 leaves only beta
  CHECK(derive_threshold({5, 0, 1, 0.0, 0}, 9) == Threshold{0, Compare::Const1});
  CHECK(derive_threshold({5, 0, 1, -0.1, 0}, 9) == Threshold{0, Compare::Const0});
  CHECK_THROWS_AS(derive_threshold({5, 1, 0, 0, 0}, 9), ModelError);
}

TEST_CASE("threshold folding agrees with the per-phi predicate") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t mismatches = 0;
  for (int n_rf : {1, 9, 64, 144}) {
    for (int k = 0; k < 1000; ++k) {
      BatchNormParams p;
      p.mu = (u(rng) * 1.6 - 0.3) * n_rf;
      const double g = u(rng);
      p.gamma = g < 0.05 ? 0.0 : (g < 0.5 ? -1 : 1) * (0.01 + 3 * u(rng));
      p.sigma = 0.01 + 5 * u(rng);
      p.beta = (u(rng) - 0.5) * 4;
      p.bias = (u(rng) - 0.5) * 4;
      // integral crossings stress the boundary
      if (k % 7 == 0) p.mu = std::floor(p.mu), p.beta = 0, p.bias = 0;
      const Threshold t = derive_threshold(p, n_rf);
      for (int phi = 0; phi <= n_rf; ++phi) mismatches += applies(t, phi) != oracle_fires(p, phi);
      CHECK(canonicalize_threshold(t, n_rf) == t);
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("canonical thresholds") {
  CHECK(canonicalize_threshold({0, Compare::Geq}, 9) == Threshold{0, Compare::Const1});
  CHECK(canonicalize_threshold({10, Compare::Geq}, 9) == Threshold{0, Compare::Const0});
  CHECK(canonicalize_threshold({9, Compare::Geq}, 9) == Threshold{9, Compare::Geq});
  CHECK(canonicalize_threshold({9, Compare::Leq}, 9) == Threshold{0, Compare::Const1});
  CHECK(canonicalize_threshold({-1, Compare::Leq}, 9) == Threshold{0, Compare::Const0});
  CHECK(canonicalize_threshold({0, Compare::Leq}, 9) == Threshold{0, Compare::Leq});
  CHECK(canonicalize_threshold({5, Compare::Const0}, 9) == Threshold{0, Compare::Const0});
}

TEST_CASE("load folds batch norm and round-trips") {
  const BnnModel m = load_model(micro_json());
  REQUIRE(m.layers.size() == 2);
  CHECK(m.layers[1].neurons[1].sign == Compare::Leq);
  CHECK(m.layers[1].neurons[1].thresh == 2);
  const std::string saved = save_model(m);
  CHECK(load_model(saved) == m);
  CHECK(save_model(load_model(saved)) == saved);
}

TEST_CASE("bundled fixtures are canonical") {
  for (const char* name : {"micro", "bnn16", "bnn32"}) {
    const BnnModel m = load_model_file(testing::model_path(name));
    std::ifstream in(testing::model_path(name), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    CHECK(save_model(m) == ss.str());
  }
}

TEST_CASE("shape chains") {
  const BnnModel m = load_model_file(testing::model_path("bnn16"));
  const auto shapes = layer_shapes(m);
  REQUIRE(shapes.size() == 5);
  CHECK(shapes[0] == Shape{8, 8, 16});
  CHECK(shapes[1] == Shape{4, 4, 32});
  CHECK(shapes[2] == Shape{2, 2, 48});
  CHECK(shapes[3] == Shape{1, 1, 64});
  CHECK(shapes[4] == Shape{1, 1, 4});
  CHECK(layer_input_shape(m, 3) == Shape{2, 2, 48});

  const BnnModel b32 = load_model_file(testing::model_path("bnn32"));
  CHECK(layer_shapes(b32)[3] == Shape{2, 2, 64});
  CHECK(b32.layers[4].spec.in_maps == 256);
}

TEST_CASE("load errors name layer and field") {
  using nlohmann::json;
  auto err = [](const json& j) {
    try {
      load_model(j.dump());
    } catch (const ModelError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const json base = json::parse(micro_json());

  json j = base;
  j["layers"][1]["neurons"][0]["weights"] = "101";
  CHECK(err(j).find("layers[1].neurons[0].weights") != std::string::npos);

  j = base;
  j["layers"][1]["neurons"][1]["batchnorm"]["sigma"] = 0;
  CHECK(err(j).find("layers[1].neurons[1].batchnorm") != std::string::npos);

  j = base;
  j["layers"][1]["in_maps"] = 5;
  j["layers"][1]["neurons"][0]["weights"] = "10100";
  j["layers"][1]["neurons"][1]["weights"] = "01100";
  CHECK(err(j).find("layers[1].in_maps") != std::string::npos);

  j = base;
  j["layers"][0]["kh"] = 2;
  j["layers"][0]["neurons"][0]["weights"] = "11";
  CHECK(err(j).find("layers[0].kh") != std::string::npos);

  j = base;
  j["layers"][1]["binarize_output"] = true;
  CHECK(err(j).find("layers[1].binarize_output") != std::string::npos);

  j = base;
  j["layers"][0]["neurons"][0]["thresh"] = 3;
  CHECK(err(j).find("layers[0].neurons[0].thresh") != std::string::npos);

  j = base;
  j["layers"][1]["neurons"][0]["batchnorm"] = base["layers"][1]["neurons"][1]["batchnorm"];
  CHECK(err(j).find("exactly one") != std::string::npos);

  j = base;
  j["layers"][0]["pool"] = "or2x2";
  j["input"]["height"] = 3;
  CHECK(err(j).find("layers[0].pool") != std::string::npos);

  CHECK_THROWS_AS(load_model("{not json"), ModelError);
}

TEST_CASE("bit strings") {
  CHECK(bits_to_string({1, 0, 1}) == "101");
  CHECK(bits_from_string("0110") == std::vector<std::uint8_t>{0, 1, 1, 0});
  CHECK_THROWS(bits_from_string("01x"));
}
