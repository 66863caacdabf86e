#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bnnc/lowering.hpp"
#include "bnnc/model_ir.hpp"
#include "bnnc/netlist.hpp"
#include "bnnc/reference_engine.hpp"

namespace bnnc {

// Each vector matches the netlist's primary-input count and order.
using StimuliSet = std::vector<std::vector<std::uint8_t>>;

std::vector<std::uint8_t> evaluate(const Netlist& n, std::span<const std::uint8_t> inputs);

// Evaluates up to 64 vectors at once: bit j of inputs[i] is input i of vector j.
// `values` is resized to one word per node.
void evaluate_words(const Netlist& n, std::span<const std::uint64_t> inputs,
                    std::vector<std::uint64_t>& values);

// Same results as mapping evaluate() over s, computed 64 vectors per sweep.
StimuliSet batch_evaluate(const Netlist& n, const StimuliSet& s, unsigned threads = 1);

// Logic depth per node: inputs and constants are 0, a gate is 1 + max over operands.
std::vector<std::uint32_t> node_depths(const Netlist& n);

// Zero-delay toggle counts over consecutive stimulus pairs.
struct ToggleProfile {
  std::size_t transitions = 0;                   // |s| - 1
  std::vector<std::uint64_t> per_node;
  std::vector<std::uint64_t> per_depth;          // summed toggles at each depth
  std::vector<std::uint64_t> nodes_per_depth;
  std::vector<std::uint64_t> per_tag;            // empty when the netlist has no tags
  std::vector<std::uint64_t> nodes_per_tag;
  std::uint64_t total = 0;
};

ToggleProfile toggle_profile(const Netlist& n, const StimuliSet& s);

std::string format_toggle_report(const ToggleProfile& p);

// Frames drawn from std::mt19937_64(seed): each frame consumes fresh 64-bit
// outputs and takes their bits LSB first, in frame bit order.
std::vector<BinaryFrame> random_frames(const Shape& shape, std::size_t count, std::uint64_t seed);

struct EquivStrategy {
  enum class Kind { Exhaustive, Random } kind = Kind::Random;
  std::size_t count = 1000;
  std::uint64_t seed = 42;

  static EquivStrategy exhaustive() { return {Kind::Exhaustive, 0, 0}; }
  static EquivStrategy random(std::size_t count, std::uint64_t seed) {
    return {Kind::Random, count, seed};
  }
};

inline constexpr std::size_t kMaxExhaustiveInputs = 20;

struct Counterexample {
  std::size_t index = 0;  // position in the checked sequence
  BinaryFrame frame;
  std::vector<int> expected;
  std::vector<int> actual;
};

struct EquivResult {
  bool pass = true;
  std::size_t vectors = 0;
  std::optional<Counterexample> counterexample;
};

// Full primary-input vector for a frame: image bits followed, in VARIABLE
// mode, by the model's parameter values.
std::vector<std::uint8_t> stimulus_for(const BnnModel& m, LowerMode mode, const BinaryFrame& frame);

// Compares the netlist's scores to infer() on each vector. Throws ShapeError
// when the netlist interface does not match the model and mode, or when an
// exhaustive sweep exceeds kMaxExhaustiveInputs image bits.
EquivResult check_equivalence(const Netlist& n, const BnnModel& m, LowerMode mode,
                              const EquivStrategy& strategy, unsigned threads = 1);

}  // namespace bnnc
