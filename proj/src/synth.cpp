#include "attntopo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace attntopo {
namespace {

constexpr double kSelfLogit = 2.0;
constexpr double kCycleLogit = 5.0;
constexpr double kCycleJitter = 0.3;
constexpr double kNoiseScale = 0.5;

// Distributions are built from raw engine output so generated bytes do not
// depend on the standard library's distribution algorithms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

 private:
  std::mt19937_64 engine_;
};

void softmax_rows(std::vector<double>& logits, std::size_t m, std::span<float> out) {
  for (std::size_t r = 0; r < m; ++r) {
    double* row = logits.data() + r * m;
    const double top = *std::max_element(row, row + m);
    double sum = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      row[c] = std::exp(row[c] - top);
      sum += row[c];
    }
    for (std::size_t c = 0; c < m; ++c) out[r * m + c] = static_cast<float>(row[c] / sum);
  }
}

void fill_head(Rng& rng, bool cyclic, std::size_t m, std::span<float> out) {
  std::vector<double> logits(m * m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      logits[r * m + c] = r == c ? kSelfLogit : kNoiseScale * rng.normal();
    }
  }
  if (cyclic) {
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = m; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t a = order[k];
      const std::size_t prev = order[(k + m - 1) % m];
      const std::size_t next = order[(k + 1) % m];
      logits[a * m + prev] = kCycleLogit + kCycleJitter * rng.normal();
      logits[a * m + next] = kCycleLogit + kCycleJitter * rng.normal();
    }
  }
  softmax_rows(logits, m, out);
}

}  // namespace

std::vector<Sample> generate_synthetic(const SynthOptions& options) {
  if (options.samples < 2) throw std::invalid_argument("synthetic dataset needs at least 2 samples");
  if (options.tokens < 4 || options.tokens > kMaxTokens) {
    throw std::invalid_argument("synthetic token count must lie in [4, " +
                                std::to_string(kMaxTokens) + "]");
  }
  if (options.layers == 0 || options.heads == 0) {
    throw std::invalid_argument("synthetic tensors need at least one head");
  }
  Rng rng(options.seed);
  std::vector<Sample> out;
  out.reserve(options.samples);
  for (std::size_t i = 0; i < options.samples; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "synth-%06zu", i);
    Sample s;
    s.id = id;
    s.label = static_cast<std::uint8_t>(i % 2);
    s.tensor = AttentionTensor(options.layers, options.heads, options.tokens);
    for (std::size_t l = 0; l < options.layers; ++l) {
      for (std::size_t h = 0; h < options.heads; ++h) {
        fill_head(rng, s.label == 1, options.tokens, s.tensor.head(l, h));
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace attntopo
