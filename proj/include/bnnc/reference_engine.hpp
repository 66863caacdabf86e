#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bnnc/model_ir.hpp"

namespace bnnc {

// Bits in (channel, y, x) row-major order, one byte per bit.
struct BinaryFrame {
  Shape shape;
  std::vector<std::uint8_t> bits;

  BinaryFrame() = default;
  explicit BinaryFrame(Shape s) : shape(s), bits(s.size(), 0) {}
  BinaryFrame(Shape s, std::vector<std::uint8_t> b);

  std::uint8_t at(int c, int y, int x) const {
    return bits[(static_cast<std::size_t>(c) * shape.height + y) * shape.width + x];
  }
  std::uint8_t& at(int c, int y, int x) {
    return bits[(static_cast<std::size_t>(c) * shape.height + y) * shape.width + x];
  }
  friend bool operator==(const BinaryFrame&, const BinaryFrame&) = default;
};

// phi = popcount(weights XNOR rec_field).
int xnor_popcount(std::span<const std::uint8_t> rec_field,
                  std::span<const std::uint8_t> weights);

// Applies the folded comparison to a popcount.
bool apply_threshold(int phi, int thresh, Compare sign);

bool binconv_neuron(std::span<const std::uint8_t> rec_field, const NeuronParams& params);

// Same-padded convolution + binarization, then OR pooling when requested.
BinaryFrame conv_layer_forward(const BinaryFrame& in, const Layer& layer);

// Binarizing fully connected layer over the flattened input.
BinaryFrame fc_layer_forward(const BinaryFrame& in, const Layer& layer);

// Raw phi per output map of a fully connected layer.
std::vector<int> fc_scores(const BinaryFrame& in, const Layer& layer);

BinaryFrame or_pool(const BinaryFrame& in);

struct Inference {
  std::vector<int> scores;
  int cls = 0;
  friend bool operator==(const Inference&, const Inference&) = default;
};

Inference infer(const BnnModel& m, const BinaryFrame& frame);

// Fans out over frames on `threads` workers; result order matches input order.
std::vector<Inference> infer_batch(const BnnModel& m, std::span<const BinaryFrame> frames,
                                   unsigned threads = 1);

// Argmax, lowest index wins ties.
int argmax(std::span<const int> scores);

// Stimuli/frame file: one line per vector of '0'/'1'. Blank lines and lines
// starting with '#' are skipped.
std::vector<std::vector<std::uint8_t>> parse_bit_lines(std::string_view text);
std::vector<std::vector<std::uint8_t>> read_bit_lines(const std::filesystem::path& path);
std::string format_bit_lines(std::span<const std::vector<std::uint8_t>> lines);

std::vector<BinaryFrame> frames_from_lines(const std::vector<std::vector<std::uint8_t>>& lines,
                                           const Shape& shape);

}  // namespace bnnc
