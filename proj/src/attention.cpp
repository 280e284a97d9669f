#include "attntopo/attention.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace attntopo {

AttentionTensor::AttentionTensor(std::size_t layers, std::size_t heads, std::size_t tokens)
    : AttentionTensor(layers, heads, tokens,
                      std::vector<float>(layers * heads * tokens * tokens, 0.0f)) {}

AttentionTensor::AttentionTensor(std::size_t layers, std::size_t heads, std::size_t tokens,
                                 std::vector<float> weights)
    : layers_(layers), heads_(heads), tokens_(tokens), weights_(std::move(weights)) {
  if (layers == 0 || heads == 0) throw std::invalid_argument("tensor needs at least one head");
  if (tokens == 0 || tokens > kMaxTokens) {
    throw std::invalid_argument("token count " + std::to_string(tokens) + " outside [1, " +
                                std::to_string(kMaxTokens) + "]");
  }
  if (weights_.size() != layers * heads * tokens * tokens) {
    throw std::invalid_argument("weight array size does not match L*H*m*m");
  }
}

std::span<const float> AttentionTensor::head(std::size_t layer, std::size_t head) const {
  if (layer >= layers_ || head >= heads_) throw std::out_of_range("head index out of range");
  return {weights_.data() + (layer * heads_ + head) * matrix_size(), matrix_size()};
}

std::span<float> AttentionTensor::head(std::size_t layer, std::size_t head) {
  if (layer >= layers_ || head >= heads_) throw std::out_of_range("head index out of range");
  return {weights_.data() + (layer * heads_ + head) * matrix_size(), matrix_size()};
}

std::string Violation::detail() const {
  char buf[96];
  if (kind == Kind::kRange) {
    std::snprintf(buf, sizeof buf, "value %.9g at column %zu outside [0,1]", observed, column);
  } else {
    std::snprintf(buf, sizeof buf, "row sum %.9g differs from 1 by more than %g", observed,
                  kRowSumTolerance);
  }
  return buf;
}

std::vector<Violation> validate_tensor(const AttentionTensor& t) {
  std::vector<Violation> out;
  const std::size_t m = t.tokens();
  for (std::size_t l = 0; l < t.layers(); ++l) {
    for (std::size_t h = 0; h < t.heads(); ++h) {
      const auto w = t.head(l, h);
      for (std::size_t r = 0; r < m; ++r) {
        double sum = 0.0;
        bool range_reported = false;
        for (std::size_t c = 0; c < m; ++c) {
          const float v = w[r * m + c];
          if (!(v >= 0.0f && v <= 1.0f) && !range_reported) {
            out.push_back({Violation::Kind::kRange, l, h, r, c, static_cast<double>(v)});
            range_reported = true;
          }
          sum += v;
        }
        if (!(std::abs(sum - 1.0) <= kRowSumTolerance)) {
          out.push_back({Violation::Kind::kRowSum, l, h, r, 0, sum});
        }
      }
    }
  }
  return out;
}

void write_violations(std::ostream& out, const std::string& sample_id,
                      const std::vector<Violation>& violations) {
  for (const Violation& v : violations) {
    out << sample_id << '\t' << v.layer << '\t' << v.head << '\t' << v.row << '\t' << v.detail()
        << '\n';
  }
}

DistanceMatrix symmetrize(std::span<const float> head_matrix, std::size_t tokens) {
  if (head_matrix.size() != tokens * tokens) {
    throw std::invalid_argument("head matrix size does not match token count");
  }
  std::vector<double> upper;
  upper.reserve(tokens * (tokens - 1) / 2);
  auto checked = [](double v, std::size_t i, std::size_t j) {
    if (!(v >= -kRangeSlack && v <= 1.0 + kRangeSlack)) {
      throw std::invalid_argument("attention weight " + std::to_string(v) + " at (" +
                                  std::to_string(i) + "," + std::to_string(j) +
                                  ") outside [0,1]");
    }
    return std::clamp(v, 0.0, 1.0);
  };
  for (std::size_t i = 0; i < tokens; ++i) {
    for (std::size_t j = i + 1; j < tokens; ++j) {
      const double wij = checked(head_matrix[i * tokens + j], i, j);
      const double wji = checked(head_matrix[j * tokens + i], j, i);
      upper.push_back(1.0 - std::max(wij, wji));
    }
  }
  return DistanceMatrix(tokens, std::move(upper));
}

}  // namespace attntopo
