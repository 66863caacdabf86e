#include "bnnc/reference_engine.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include "bnnc/error.hpp"

namespace bnnc {

BinaryFrame::BinaryFrame(Shape s, std::vector<std::uint8_t> b) : shape(s), bits(std::move(b)) {
  if (bits.size() != shape.size())
    throw ShapeError("frame has " + std::to_string(bits.size()) + " bits, shape " +
                     to_string(shape) + " needs " + std::to_string(shape.size()));
}

int xnor_popcount(std::span<const std::uint8_t> rec_field,
                  std::span<const std::uint8_t> weights) {
  if (rec_field.size() != weights.size())
    throw ShapeError("receptive field has " + std::to_string(rec_field.size()) +
                     " bits, weights have " + std::to_string(weights.size()));
  int phi = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) phi += (rec_field[i] == weights[i]);
  return phi;
}

bool apply_threshold(int phi, int thresh, Compare sign) {
  switch (sign) {
    case Compare::Geq: return phi >= thresh;
    case Compare::Leq: return phi <= thresh;
    case Compare::Const1: return true;
    case Compare::Const0: return false;
  }
  return false;
}

bool binconv_neuron(std::span<const std::uint8_t> rec_field, const NeuronParams& params) {
  return apply_threshold(xnor_popcount(rec_field, params.weights), params.thresh, params.sign);
}

BinaryFrame or_pool(const BinaryFrame& in) {
  const Shape& s = in.shape;
  if (s.height % 2 != 0 || s.width % 2 != 0)
    throw ShapeError("or_pool needs even spatial dims, got " + to_string(s));
  BinaryFrame out(Shape{s.height / 2, s.width / 2, s.channels});
  for (int c = 0; c < s.channels; ++c)
    for (int y = 0; y < s.height / 2; ++y)
      for (int x = 0; x < s.width / 2; ++x)
        out.at(c, y, x) = in.at(c, 2 * y, 2 * x) | in.at(c, 2 * y, 2 * x + 1) |
                          in.at(c, 2 * y + 1, 2 * x) | in.at(c, 2 * y + 1, 2 * x + 1);
  return out;
}

BinaryFrame conv_layer_forward(const BinaryFrame& in, const Layer& layer) {
  const LayerSpec& s = layer.spec;
  if (s.kind != LayerKind::BinConv) throw ShapeError("conv_layer_forward on a non-conv layer");
  if (in.shape.channels != s.in_maps)
    throw ShapeError("conv layer expects " + std::to_string(s.in_maps) + " input maps, got " +
                     to_string(in.shape));
  const int h = in.shape.height, w = in.shape.width;
  const int ry = s.kh / 2, rx = s.kw / 2;
  BinaryFrame out(Shape{h, w, s.out_maps});
  std::vector<std::uint8_t> field(static_cast<std::size_t>(s.receptive_field()));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::size_t k = 0;
      for (int c = 0; c < s.in_maps; ++c)
        for (int ky = 0; ky < s.kh; ++ky)
          for (int kx = 0; kx < s.kw; ++kx) {
            int yy = y + ky - ry, xx = x + kx - rx;
            bool inside = yy >= 0 && yy < h && xx >= 0 && xx < w;
            field[k++] = inside ? in.at(c, yy, xx) : 0;
          }
      for (int m = 0; m < s.out_maps; ++m)
        out.at(m, y, x) = binconv_neuron(field, layer.neurons[m]);
    }
  return s.pool == Pool::Or2x2 ? or_pool(out) : out;
}

std::vector<int> fc_scores(const BinaryFrame& in, const Layer& layer) {
  const LayerSpec& s = layer.spec;
  if (s.kind != LayerKind::BinFc) throw ShapeError("fc_scores on a non-fc layer");
  if (in.bits.size() != static_cast<std::size_t>(s.in_maps))
    throw ShapeError("fc layer expects " + std::to_string(s.in_maps) + " inputs, got " +
                     std::to_string(in.bits.size()));
  std::vector<int> scores(static_cast<std::size_t>(s.out_maps));
  for (int m = 0; m < s.out_maps; ++m) scores[m] = xnor_popcount(in.bits, layer.neurons[m].weights);
  return scores;
}

BinaryFrame fc_layer_forward(const BinaryFrame& in, const Layer& layer) {
  std::vector<int> phi = fc_scores(in, layer);
  BinaryFrame out(Shape{1, 1, layer.spec.out_maps});
  for (std::size_t m = 0; m < phi.size(); ++m)
    out.bits[m] = apply_threshold(phi[m], layer.neurons[m].thresh, layer.neurons[m].sign);
  return out;
}

int argmax(std::span<const int> scores) {
  int best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = static_cast<int>(i);
  return best;
}

Inference infer(const BnnModel& m, const BinaryFrame& frame) {
  if (frame.shape != m.input)
    throw ShapeError("frame shape " + to_string(frame.shape) + " does not match model input " +
                     to_string(m.input));
  BinaryFrame cur = frame;
  Inference result;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const Layer& l = m.layers[i];
    if (l.spec.kind == LayerKind::BinConv) {
      cur = conv_layer_forward(cur, l);
    } else if (l.spec.binarize_output) {
      cur = fc_layer_forward(cur, l);
    } else {
      result.scores = fc_scores(cur, l);
    }
  }
  result.cls = argmax(result.scores);
  return result;
}

std::vector<Inference> infer_batch(const BnnModel& m, std::span<const BinaryFrame> frames,
                                   unsigned threads) {
  std::vector<Inference> out(frames.size());
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(frames.size())));
  if (threads <= 1) {
    for (std::size_t i = 0; i < frames.size(); ++i) out[i] = infer(m, frames[i]);
    return out;
  }
  std::vector<std::jthread> workers;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned t = 0; t < threads; ++t)
    workers.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < frames.size(); i += threads) out[i] = infer(m, frames[i]);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  workers.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::vector<std::vector<std::uint8_t>> parse_bit_lines(std::string_view text) {
  std::vector<std::vector<std::uint8_t>> lines;
  std::size_t pos = 0, lineno = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty() && line.front() != '#') {
      try {
        lines.push_back(bits_from_string(line));
      } catch (const Error& e) {
        throw ShapeError("line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    if (end == text.size()) break;
    pos = end + 1;
  }
  return lines;
}

std::vector<std::vector<std::uint8_t>> read_bit_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_bit_lines(ss.str());
  } catch (const Error& e) {
    throw ShapeError(path.string() + ": " + e.what());
  }
}

std::string format_bit_lines(std::span<const std::vector<std::uint8_t>> lines) {
  std::string out;
  for (const auto& l : lines) {
    out += bits_to_string(l);
    out += '\n';
  }
  return out;
}

std::vector<BinaryFrame> frames_from_lines(const std::vector<std::vector<std::uint8_t>>& lines,
                                           const Shape& shape) {
  std::vector<BinaryFrame> frames;
  frames.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].size() != shape.size())
      throw ShapeError("frame " + std::to_string(i) + " has " + std::to_string(lines[i].size()) +
                       " bits, expected " + std::to_string(shape.size()));
    frames.emplace_back(shape, lines[i]);
  }
  return frames;
}

}  // namespace bnnc
