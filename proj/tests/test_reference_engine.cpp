#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "bnnc/reference_engine.hpp"
#include "support.hpp"

using namespace bnnc;

namespace {

// Independent forward pass in the +-1 domain: a bit b stands for 2b - 1,
// padding bits are 0 (i.e. -1), phi = (dot + N_RF) / 2, pooling is max.
int pm(int b) { return 2 * b - 1; }

bool fires(int phi, const NeuronParams& p) {
  switch (p.sign) {
    case Compare::Geq: return phi >= p.thresh;
    case Compare::Leq: return phi <= p.thresh;
    case Compare::Const1: return true;
    case Compare::Const0: return false;
  }
  return false;
}

std::vector<int> oracle_forward(const BnnModel& m, std::vector<int> act, Shape s, std::vector<int>* scores) {
  for (const Layer& l : m.layers) {
    const LayerSpec& sp = l.spec;
    if (sp.kind == LayerKind::BinConv) {
      std::vector<int> out(static_cast<std::size_t>(s.height) * s.width * sp.out_maps, -1);
      for (int o = 0; o < sp.out_maps; ++o)
        for (int y = 0; y < s.height; ++y)
          for (int x = 0; x < s.width; ++x) {
            int dot = 0;
            for (int c = 0; c < sp.in_maps; ++c)
              for (int ky = 0; ky < sp.kh; ++ky)
                for (int kx = 0; kx < sp.kw; ++kx) {
                  const int iy = y + ky - sp.kh / 2, ix = x + kx - sp.kw / 2;
                  const int a = (iy < 0 || ix < 0 || iy >= s.height || ix >= s.width)
                                    ? -1
                                    : act[(static_cast<std::size_t>(c) * s.height + iy) * s.width + ix];
                  const int w = pm(l.neurons[o].weights[(c * sp.kh + ky) * sp.kw + kx]);
                  dot += a * w;
                }
            const int phi = (dot + sp.receptive_field()) / 2;
            out[(static_cast<std::size_t>(o) * s.height + y) * s.width + x] = fires(phi, l.neurons[o]) ? 1 : -1;
          }
      s.channels = sp.out_maps;
      if (sp.pool == Pool::Or2x2) {
        Shape p{s.height / 2, s.width / 2, s.channels};
        std::vector<int> pooled(p.size());
        for (int c = 0; c < p.channels; ++c)
          for (int y = 0; y < p.height; ++y)
            for (int x = 0; x < p.width; ++x) {
              int v = -1;
              for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx)
                  v = std::max(v, out[(static_cast<std::size_t>(c) * s.height + 2 * y + dy) * s.width + 2 * x + dx]);
              pooled[(static_cast<std::size_t>(c) * p.height + y) * p.width + x] = v;
            }
        out = std::move(pooled);
        s = p;
      }
      act = std::move(out);
    } else {
      std::vector<int> out;
      for (int o = 0; o < sp.out_maps; ++o) {
        int dot = 0;
        for (int i = 0; i < sp.in_maps; ++i) dot += act[i] * pm(l.neurons[o].weights[i]);
        const int phi = (dot + sp.in_maps) / 2;
        if (!sp.binarize_output) {
          if (scores) scores->push_back(phi);
          out.push_back(phi);
        } else {
          out.push_back(fires(phi, l.neurons[o]) ? 1 : -1);
        }
      }
      act = std::move(out);
      s = {1, 1, sp.out_maps};
    }
  }
  return act;
}

std::vector<int> oracle_scores(const BnnModel& m, const BinaryFrame& f) {
  std::vector<int> act;
  for (auto b : f.bits) act.push_back(pm(b));
  std::vector<int> scores;
  oracle_forward(m, act, m.input, &scores);
  return scores;
}

BinaryFrame random_frame(Shape s, std::mt19937_64& rng) {
  BinaryFrame f(s);
  for (auto& b : f.bits) b = rng() & 1;
  return f;
}

}  // namespace

TEST_CASE("xnor popcount identities") {
  std::mt19937_64 rng(3);
  for (int n : {1, 9, 64, 288}) {
    for (int k = 0; k < 50; ++k) {
      std::vector<std::uint8_t> a(n), w(n);
      for (auto& b : a) b = rng() & 1;
      for (auto& b : w) b = rng() & 1;
      int xors = 0;
      for (int i = 0; i < n; ++i) xors += a[i] ^ w[i];
      const int phi = xnor_popcount(a, w);
      CHECK(phi + xors == n);
      // flipping one input moves phi by exactly one
      const int i = static_cast<int>(rng() % n);
      a[i] ^= 1;
      const int flipped = xnor_popcount(a, w);
      CHECK(std::abs(flipped - phi) == 1);
      CHECK((flipped - phi) == (a[i] == w[i] ? 1 : -1));
    }
  }
}

TEST_CASE("threshold application") {
  CHECK(apply_threshold(5, 5, Compare::Geq));
  CHECK_FALSE(apply_threshold(4, 5, Compare::Geq));
  CHECK(apply_threshold(5, 5, Compare::Leq));
  CHECK_FALSE(apply_threshold(6, 5, Compare::Leq));
  CHECK(apply_threshold(0, 0, Compare::Const1));
  CHECK_FALSE(apply_threshold(9, 0, Compare::Const0));
}

TEST_CASE("or pooling equals max over +-1 values") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const BinaryFrame f = random_frame({4, 6, 3}, rng);
    const BinaryFrame p = or_pool(f);
    REQUIRE(p.shape == Shape{2, 3, 3});
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x) {
          int mx = -1;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) mx = std::max(mx, pm(f.at(c, 2 * y + dy, 2 * x + dx)));
          CHECK(pm(p.at(c, y, x)) == mx);
        }
  }
}

TEST_CASE("conv layer against brute force") {
  std::mt19937_64 rng(9);
  for (int k : {1, 3, 5}) {
    const bnnc::Topology t{"c", {6, 6, 2}, {testing::conv(2, 3, k, false), testing::fc(108, 2, false)}};
    const BnnModel m = testing::random_model(t, 100 + k);
    for (int r = 0; r < 20; ++r) {
      const BinaryFrame f = random_frame(m.input, rng);
      CHECK(infer(m, f).scores == oracle_scores(m, f));
    }
  }
}

TEST_CASE("micro model exhaustive against brute force") {
  const BnnModel m = load_model_file(testing::model_path("micro"));
  REQUIRE(m.input.size() == 16);
  std::size_t mismatches = 0;
  for (std::uint32_t v = 0; v < (1u << 16); ++v) {
    BinaryFrame f(m.input);
    for (int i = 0; i < 16; ++i) f.bits[i] = (v >> i) & 1;
    const Inference inf = infer(m, f);
    const auto want = oracle_scores(m, f);
    mismatches += inf.scores != want;
    mismatches += inf.cls != static_cast<int>(std::max_element(want.begin(), want.end()) - want.begin());
  }
  CHECK(mismatches == 0);
}

TEST_CASE("bundled fixtures against brute force") {
  std::mt19937_64 rng(11);
  for (const char* name : {"bnn16", "bnn32"}) {
    const BnnModel m = load_model_file(testing::model_path(name));
    for (int r = 0; r < 5; ++r) {
      const BinaryFrame f = random_frame(m.input, rng);
      CHECK(infer(m, f).scores == oracle_scores(m, f));
    }
  }
}

TEST_CASE("random small models against brute force") {
  std::mt19937_64 rng(13);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const BnnModel m = testing::random_model(testing::small_topology(), seed);
    for (int r = 0; r < 20; ++r) {
      const BinaryFrame f = random_frame(m.input, rng);
      CHECK(infer(m, f).scores == oracle_scores(m, f));
    }
  }
}

TEST_CASE("batch inference matches sequential at any thread count") {
  const BnnModel m = testing::random_model(testing::small_topology(), 77);
  std::mt19937_64 rng(17);
  std::vector<BinaryFrame> frames;
  for (int i = 0; i < 97; ++i) frames.push_back(random_frame(m.input, rng));
  std::vector<Inference> seq;
  for (const auto& f : frames) seq.push_back(infer(m, f));
  for (unsigned t : {1u, 2u, 3u, 8u}) CHECK(infer_batch(m, frames, t) == seq);
}

TEST_CASE("argmax takes the lowest index on ties") {
  CHECK(argmax(std::vector<int>{3, 7, 7, 1}) == 1);
  CHECK(argmax(std::vector<int>{2, 2}) == 0);
  CHECK(argmax(std::vector<int>{0, 0, 5}) == 2);
}

TEST_CASE("bit line files") {
  const auto lines = parse_bit_lines("# header\n0101\n\n1100\n");
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == std::vector<std::uint8_t>{0, 1, 0, 1});
  CHECK(format_bit_lines(lines) == "0101\n1100\n");
  const auto frames = frames_from_lines(lines, {2, 2, 1});
  CHECK(frames[1].at(0, 0, 1) == 1);
  CHECK(frames[1].at(0, 1, 0) == 0);
  CHECK_THROWS(frames_from_lines(lines, {3, 3, 1}));
  CHECK_THROWS(parse_bit_lines("01a\n"));
}
