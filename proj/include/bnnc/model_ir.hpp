#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bnnc {

struct Shape {
  int height = 1;
  int width = 1;
  int channels = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(height) * width * channels;
  }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

enum class LayerKind { BinConv, BinFc };
enum class Pool { None, Or2x2 };

// Direction of the folded batch-norm comparison. Const0/Const1 neurons ignore
// their popcount entirely.
enum class Compare { Geq, Leq, Const1, Const0 };

std::string_view to_string(Compare c);
Compare parse_compare(std::string_view s);

struct LayerSpec {
  LayerKind kind = LayerKind::BinFc;
  int kh = 1;
  int kw = 1;
  int in_maps = 1;   // binfc: flattened input width
  int out_maps = 1;
  Pool pool = Pool::None;       // binconv only
  bool binarize_output = true;  // binfc only; false on the final layer

  // N_RF = IF * kh * kw.
  int receptive_field() const { return in_maps * kh * kw; }
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct BatchNormParams {
  double mu = 0.0;
  double gamma = 1.0;
  double sigma = 1.0;
  double beta = 0.0;
  double bias = 0.0;
};

struct Threshold {
  int thresh = 0;
  Compare sign = Compare::Geq;
  friend bool operator==(const Threshold&, const Threshold&) = default;
};

// weights[(if * kh + ky) * kw + kx], each entry 0 or 1.
struct NeuronParams {
  std::vector<std::uint8_t> weights;
  int thresh = 0;
  Compare sign = Compare::Geq;
  friend bool operator==(const NeuronParams&, const NeuronParams&) = default;
};

struct Layer {
  LayerSpec spec;
  std::vector<NeuronParams> neurons;  // one per output map
  friend bool operator==(const Layer&, const Layer&) = default;
};

struct BnnModel {
  std::string name;
  Shape input;
  std::vector<Layer> layers;
  friend bool operator==(const BnnModel&, const BnnModel&) = default;
};

// Folds batch norm + sign into an integer comparison on the popcount phi.
// The result agrees with [gamma * (phi + bias - mu) / sigma + beta >= 0] for
// every integer phi in [0, n_rf]; comparisons that are constant over that
// range come back as Const0/Const1 with thresh 0.
Threshold derive_threshold(const BatchNormParams& p, int n_rf);

// Canonical form of an explicit (thresh, sign) pair over phi in [0, n_rf].
Threshold canonicalize_threshold(Threshold t, int n_rf);

// Bits needed for a popcount over n_rf inputs: floor(log2(n_rf)) + 1.
int popcount_width(int n_rf);

// Throws ModelError naming the layer index and field path.
void validate(const BnnModel& m);

// Output shape after every layer (post-pool). binfc layers yield 1x1xOF.
std::vector<Shape> layer_shapes(const BnnModel& m);

// Shape feeding layer `index` (the model input for index 0).
Shape layer_input_shape(const BnnModel& m, std::size_t index);

// Structural skeleton of a topology; used for estimates that need no weights.
struct Topology {
  std::string name;
  Shape input;
  std::vector<LayerSpec> layers;
};

Topology topology_of(const BnnModel& m);
std::vector<Shape> layer_shapes(const Topology& t);
void validate(const Topology& t);

BnnModel load_model(std::string_view text);
BnnModel load_model_file(const std::filesystem::path& path);

// Deterministic JSON: sorted keys, thresholds always folded to (thresh, sign).
std::string save_model(const BnnModel& m);

std::string bits_to_string(const std::vector<std::uint8_t>& bits);
std::vector<std::uint8_t> bits_from_string(std::string_view s);

}  // namespace bnnc
