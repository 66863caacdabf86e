#include "bnnc/model_ir.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bnnc/error.hpp"

namespace bnnc {

using json = nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

[[noreturn]] void fail(std::size_t layer, const std::string& path,
                       const std::string& what) {
  throw ModelError("layer " + std::to_string(layer) + ": " + path + ": " + what);
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ModelError(path + ": " + what);
}

bool fires(const BatchNormParams& p, double phi) {
  return p.gamma * (phi + p.bias - p.mu) / p.sigma + p.beta >= 0.0;
}

// Clamp a real-valued threshold guess into [lo, hi] before converting to int.
int clamp_guess(double x, int lo, int hi) {
  if (std::isnan(x)) return lo;
  if (x <= lo) return lo;
  if (x >= hi) return hi;
  return static_cast<int>(x);
}

const json& member(const json& obj, const char* key, std::size_t layer,
                   const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(layer, path + "." + key, "missing");
  return *it;
}

int positive_int(const json& obj, const char* key, std::size_t layer,
                 const std::string& path) {
  const json& v = member(obj, key, layer, path);
  if (!v.is_number_integer() || v.get<long long>() < 1 ||
      v.get<long long>() > (1 << 24))
    fail(layer, path + "." + key, "expected a positive integer");
  return v.get<int>();
}

double real(const json& obj, const char* key, std::size_t layer,
            const std::string& path) {
  const json& v = member(obj, key, layer, path);
  if (!v.is_number()) fail(layer, path + "." + key, "expected a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) fail(layer, path + "." + key, "must be finite");
  return d;
}

std::string str(const json& obj, const char* key, std::size_t layer,
                const std::string& path) {
  const json& v = member(obj, key, layer, path);
  if (!v.is_string()) fail(layer, path + "." + key, "expected a string");
  return v.get<std::string>();
}

NeuronParams parse_neuron(const json& j, int n_rf, std::size_t layer,
                          const std::string& path) {
  if (!j.is_object()) fail(layer, path, "expected an object");
  NeuronParams n;
  std::string w = str(j, "weights", layer, path);
  if (static_cast<int>(w.size()) != n_rf)
    fail(layer, path + ".weights",
         "length " + std::to_string(w.size()) + ", expected " + std::to_string(n_rf));
  try {
    n.weights = bits_from_string(w);
  } catch (const Error& e) {
    fail(layer, path + ".weights", e.what());
  }

  bool has_bn = j.contains("batchnorm");
  bool has_thresh = j.contains("thresh") || j.contains("sign");
  if (has_bn == has_thresh)
    fail(layer, path, "expected exactly one of {thresh+sign, batchnorm}");

  if (has_bn) {
    const json& bn = j.at("batchnorm");
    std::string bp = path + ".batchnorm";
    if (!bn.is_object()) fail(layer, bp, "expected an object");
    BatchNormParams p;
    p.mu = real(bn, "mu", layer, bp);
    p.gamma = real(bn, "gamma", layer, bp);
    p.sigma = real(bn, "sigma", layer, bp);
    p.beta = real(bn, "beta", layer, bp);
    p.bias = bn.contains("bias") ? real(bn, "bias", layer, bp) : 0.0;
    if (!(p.sigma > 0.0)) fail(layer, bp + ".sigma", "must be > 0");
    Threshold t = derive_threshold(p, n_rf);
    n.thresh = t.thresh;
    n.sign = t.sign;
    return n;
  }

  const json& tv = member(j, "thresh", layer, path);
  if (!tv.is_number_integer()) fail(layer, path + ".thresh", "expected an integer");
  long long thresh = tv.get<long long>();
  if (thresh < 0 || thresh > n_rf + 1)
    fail(layer, path + ".thresh",
         "out of range [0, " + std::to_string(n_rf + 1) + "]");
  Compare sign;
  try {
    sign = parse_compare(str(j, "sign", layer, path));
  } catch (const Error& e) {
    fail(layer, path + ".sign", e.what());
  }
  Threshold t = canonicalize_threshold({static_cast<int>(thresh), sign}, n_rf);
  n.thresh = t.thresh;
  n.sign = t.sign;
  return n;
}

Layer parse_layer(const json& j, std::size_t index) {
  const std::string path = "layers[" + std::to_string(index) + "]";
  if (!j.is_object()) fail(index, path, "expected an object");
  Layer layer;
  LayerSpec& s = layer.spec;
  std::string type = str(j, "type", index, path);
  if (type == "binconv") {
    s.kind = LayerKind::BinConv;
    s.kh = positive_int(j, "kh", index, path);
    s.kw = positive_int(j, "kw", index, path);
    std::string padding = str(j, "padding", index, path);
    if (padding != "same") fail(index, path + ".padding", "only \"same\" is supported");
    std::string pool = str(j, "pool", index, path);
    if (pool == "none")
      s.pool = Pool::None;
    else if (pool == "or2x2")
      s.pool = Pool::Or2x2;
    else
      fail(index, path + ".pool", "expected \"none\" or \"or2x2\"");
    if (j.contains("binarize_output"))
      fail(index, path + ".binarize_output", "only valid on binfc layers");
  } else if (type == "binfc") {
    s.kind = LayerKind::BinFc;
    const json& b = member(j, "binarize_output", index, path);
    if (!b.is_boolean()) fail(index, path + ".binarize_output", "expected a boolean");
    s.binarize_output = b.get<bool>();
    for (const char* k : {"kh", "kw", "padding", "pool"})
      if (j.contains(k)) fail(index, path + "." + k, "only valid on binconv layers");
  } else {
    fail(index, path + ".type", "unknown layer type \"" + type + "\"");
  }
  s.in_maps = positive_int(j, "in_maps", index, path);
  s.out_maps = positive_int(j, "out_maps", index, path);

  const json& neurons = member(j, "neurons", index, path);
  if (!neurons.is_array()) fail(index, path + ".neurons", "expected an array");
  if (static_cast<int>(neurons.size()) != s.out_maps)
    fail(index, path + ".neurons",
         std::to_string(neurons.size()) + " entries, expected out_maps=" +
             std::to_string(s.out_maps));
  const int n_rf = s.receptive_field();
  layer.neurons.reserve(neurons.size());
  for (std::size_t m = 0; m < neurons.size(); ++m)
    layer.neurons.push_back(
        parse_neuron(neurons[m], n_rf, index, path + ".neurons[" + std::to_string(m) + "]"));
  return layer;
}

Shape parse_shape(const json& j) {
  if (!j.is_object()) fail("input", "expected an object");
  Shape s;
  auto get = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer() || it->get<long long>() < 1 ||
        it->get<long long>() > (1 << 16))
      fail(std::string("input.") + key, "expected a positive integer");
    return it->get<int>();
  };
  s.height = get("height");
  s.width = get("width");
  s.channels = get("channels");
  return s;
}

// Shared chain check for models and bare topologies.
void validate_chain(const Shape& input, const std::vector<LayerSpec>& layers) {
  if (layers.empty()) fail("layers", "model has no layers");
  if (input.height < 1 || input.width < 1 || input.channels < 1)
    fail("input", "all dimensions must be >= 1");
  Shape cur = input;
  bool flattened = false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& s = layers[i];
    const std::string path = "layers[" + std::to_string(i) + "]";
    const bool last = i + 1 == layers.size();
    if (s.in_maps < 1 || s.out_maps < 1) fail(i, path, "map counts must be >= 1");
    if (s.kind == LayerKind::BinConv) {
      if (flattened) fail(i, path + ".type", "binconv cannot follow a binfc layer");
      if (s.kh < 1 || s.kw < 1 || s.kh % 2 == 0 || s.kw % 2 == 0)
        fail(i, path + ".kh", "filter sizes must be odd and positive");
      if (s.in_maps != cur.channels)
        fail(i, path + ".in_maps",
             std::to_string(s.in_maps) + " does not match incoming channels " +
                 std::to_string(cur.channels));
      if (last) fail(i, path + ".type", "the final layer must be binfc");
      cur.channels = s.out_maps;
      if (s.pool == Pool::Or2x2) {
        if (cur.height % 2 != 0 || cur.width % 2 != 0)
          fail(i, path + ".pool", "or2x2 needs even spatial dims, got " + to_string(cur));
        cur.height /= 2;
        cur.width /= 2;
      }
    } else {
      if (s.kh != 1 || s.kw != 1) fail(i, path, "binfc layers have no filter size");
      if (static_cast<std::size_t>(s.in_maps) != cur.size())
        fail(i, path + ".in_maps",
             std::to_string(s.in_maps) + " does not match flattened input width " +
                 std::to_string(cur.size()));
      if (s.binarize_output == last)
        fail(i, path + ".binarize_output",
             last ? "the final layer must not binarize" : "only the final layer may skip binarization");
      cur = Shape{1, 1, s.out_maps};
      flattened = true;
    }
  }
}

}  // namespace

std::string to_string(const Shape& s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" +
         std::to_string(s.channels);
}

std::string_view to_string(Compare c) {
  switch (c) {
    case Compare::Geq: return "GEQ";
    case Compare::Leq: return "LEQ";
    case Compare::Const1: return "CONST1";
    case Compare::Const0: return "CONST0";
  }
  return "?";
}

Compare parse_compare(std::string_view s) {
  if (s == "GEQ") return Compare::Geq;
  if (s == "LEQ") return Compare::Leq;
  if (s == "CONST1") return Compare::Const1;
  if (s == "CONST0") return Compare::Const0;
  throw ModelError("unknown comparison \"" + std::string(s) + "\"");
}

int popcount_width(int n_rf) {
  if (n_rf < 1) throw ModelError("receptive field must be >= 1");
  return std::bit_width(static_cast<unsigned>(n_rf));
}

Threshold derive_threshold(const BatchNormParams& p, int n_rf) {
  if (!(p.sigma > 0.0)) throw ModelError("batchnorm sigma must be > 0");
  if (n_rf < 1) throw ModelError("receptive field must be >= 1");

  if (p.gamma == 0.0)
    return {0, p.beta >= 0.0 ? Compare::Const1 : Compare::Const0};

  // phi crosses the decision boundary at x = mu - b - beta * sigma / gamma.
  // Start from the closed form and correct it against the exact predicate;
  // the float predicate is monotone in phi so a local walk suffices.
  const double x = p.mu - p.bias - p.beta * p.sigma / p.gamma;

  if (p.gamma > 0.0) {
    // Smallest phi in [0, n_rf] that fires; n_rf + 1 if none does.
    int t = clamp_guess(std::ceil(x), 0, n_rf + 1);
    while (t > 0 && fires(p, t - 1)) --t;
    while (t <= n_rf && !fires(p, t)) ++t;
    if (t == 0) return {0, Compare::Const1};
    if (t == n_rf + 1) return {0, Compare::Const0};
    return {t, Compare::Geq};
  }

  // gamma < 0: largest phi in [0, n_rf] that fires; -1 if none does.
  int t = clamp_guess(std::floor(x), -1, n_rf);
  while (t < n_rf && fires(p, t + 1)) ++t;
  while (t >= 0 && !fires(p, t)) --t;
  if (t == n_rf) return {0, Compare::Const1};
  if (t == -1) return {0, Compare::Const0};
  return {t, Compare::Leq};
}

Threshold canonicalize_threshold(Threshold t, int n_rf) {
  switch (t.sign) {
    case Compare::Geq:
      if (t.thresh <= 0) return {0, Compare::Const1};
      if (t.thresh > n_rf) return {0, Compare::Const0};
      return t;
    case Compare::Leq:
      if (t.thresh >= n_rf) return {0, Compare::Const1};
      if (t.thresh < 0) return {0, Compare::Const0};
      return t;
    case Compare::Const0:
    case Compare::Const1:
      return {0, t.sign};
  }
  return t;
}

void validate(const Topology& t) { validate_chain(t.input, t.layers); }

void validate(const BnnModel& m) {
  validate(topology_of(m));
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const Layer& l = m.layers[i];
    const std::string path = "layers[" + std::to_string(i) + "].neurons";
    if (static_cast<int>(l.neurons.size()) != l.spec.out_maps)
      fail(i, path, std::to_string(l.neurons.size()) + " entries, expected " +
                        std::to_string(l.spec.out_maps));
    const int n_rf = l.spec.receptive_field();
    for (std::size_t m_i = 0; m_i < l.neurons.size(); ++m_i) {
      const NeuronParams& n = l.neurons[m_i];
      const std::string np = path + "[" + std::to_string(m_i) + "]";
      if (static_cast<int>(n.weights.size()) != n_rf)
        fail(i, np + ".weights", "length " + std::to_string(n.weights.size()) +
                                     ", expected " + std::to_string(n_rf));
      for (auto b : n.weights)
        if (b > 1) fail(i, np + ".weights", "bits must be 0 or 1");
      if (canonicalize_threshold({n.thresh, n.sign}, n_rf) != Threshold{n.thresh, n.sign})
        fail(i, np + ".thresh", "threshold is not in canonical form");
    }
  }
}

Topology topology_of(const BnnModel& m) {
  Topology t{m.name, m.input, {}};
  t.layers.reserve(m.layers.size());
  for (const Layer& l : m.layers) t.layers.push_back(l.spec);
  return t;
}

std::vector<Shape> layer_shapes(const Topology& t) {
  std::vector<Shape> out;
  Shape cur = t.input;
  for (const LayerSpec& s : t.layers) {
    if (s.kind == LayerKind::BinConv) {
      cur.channels = s.out_maps;
      if (s.pool == Pool::Or2x2) {
        cur.height /= 2;
        cur.width /= 2;
      }
    } else {
      cur = Shape{1, 1, s.out_maps};
    }
    out.push_back(cur);
  }
  return out;
}

std::vector<Shape> layer_shapes(const BnnModel& m) { return layer_shapes(topology_of(m)); }

Shape layer_input_shape(const BnnModel& m, std::size_t index) {
  if (index == 0) return m.input;
  return layer_shapes(m).at(index - 1);
}

BnnModel load_model(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("(root)", "expected an object");
  if (j.contains("format_version")) {
    const json& v = j.at("format_version");
    if (!v.is_number_integer() || v.get<int>() != kFormatVersion)
      fail("format_version", "unsupported version");
  }
  BnnModel m;
  auto name = j.find("name");
  if (name == j.end() || !name->is_string()) fail("name", "expected a string");
  m.name = name->get<std::string>();
  auto input = j.find("input");
  if (input == j.end()) fail("input", "missing");
  m.input = parse_shape(*input);
  auto layers = j.find("layers");
  if (layers == j.end() || !layers->is_array()) fail("layers", "expected an array");
  for (std::size_t i = 0; i < layers->size(); ++i) m.layers.push_back(parse_layer((*layers)[i], i));
  validate(m);
  return m;
}

BnnModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open model file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return load_model(ss.str());
  } catch (const ModelError& e) {
    throw ModelError(path.string() + ": " + e.what());
  }
}

std::string save_model(const BnnModel& m) {
  json j;
  j["format_version"] = kFormatVersion;
  j["name"] = m.name;
  j["input"] = {{"height", m.input.height}, {"width", m.input.width}, {"channels", m.input.channels}};
  json layers = json::array();
  for (const Layer& l : m.layers) {
    json lj;
    const LayerSpec& s = l.spec;
    if (s.kind == LayerKind::BinConv) {
      lj["type"] = "binconv";
      lj["kh"] = s.kh;
      lj["kw"] = s.kw;
      lj["padding"] = "same";
      lj["pool"] = s.pool == Pool::Or2x2 ? "or2x2" : "none";
    } else {
      lj["type"] = "binfc";
      lj["binarize_output"] = s.binarize_output;
    }
    lj["in_maps"] = s.in_maps;
    lj["out_maps"] = s.out_maps;
    json neurons = json::array();
    for (const NeuronParams& n : l.neurons)
      neurons.push_back({{"weights", bits_to_string(n.weights)},
                         {"thresh", n.thresh},
                         {"sign", std::string(to_string(n.sign))}});
    lj["neurons"] = std::move(neurons);
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  return j.dump(1) + "\n";
}

std::string bits_to_string(const std::vector<std::uint8_t>& bits) {
  std::string s(bits.size(), '0');
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) s[i] = '1';
  return s;
}

std::vector<std::uint8_t> bits_from_string(std::string_view s) {
  std::vector<std::uint8_t> bits(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '0' && s[i] != '1')
      throw ShapeError("invalid bit character at position " + std::to_string(i));
    bits[i] = s[i] == '1';
  }
  return bits;
}

}  // namespace bnnc
