#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "attntopo/distance_matrix.hpp"

namespace attntopo {

inline constexpr double kRowSumTolerance = 1e-3;
inline constexpr double kRangeSlack = 1e-6;
inline constexpr std::size_t kMaxSampleIdBytes = 256;

/// L x H stack of m x m attention matrices, stored layer-major, head-minor,
/// each matrix row-major.
class AttentionTensor {
 public:
  AttentionTensor() = default;
  AttentionTensor(std::size_t layers, std::size_t heads, std::size_t tokens);
  AttentionTensor(std::size_t layers, std::size_t heads, std::size_t tokens,
                  std::vector<float> weights);

  std::size_t layers() const noexcept { return layers_; }
  std::size_t heads() const noexcept { return heads_; }
  std::size_t tokens() const noexcept { return tokens_; }
  std::size_t matrix_size() const noexcept { return tokens_ * tokens_; }

  std::span<const float> head(std::size_t layer, std::size_t head) const;
  std::span<float> head(std::size_t layer, std::size_t head);

  const std::vector<float>& weights() const noexcept { return weights_; }

  friend bool operator==(const AttentionTensor&, const AttentionTensor&) = default;

 private:
  std::size_t layers_ = 0;
  std::size_t heads_ = 0;
  std::size_t tokens_ = 0;
  std::vector<float> weights_;
};

struct Sample {
  std::string id;
  std::uint8_t label = 0;
  AttentionTensor tensor;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Violation {
  enum class Kind { kRange, kRowSum };
  Kind kind = Kind::kRange;
  std::size_t layer = 0;
  std::size_t head = 0;
  std::size_t row = 0;
  std::size_t column = 0;  // offending column for kRange
  double observed = 0.0;   // offending value or row sum

  std::string detail() const;
};

/// Checks every value is in [0, 1] and every row sums to 1 within
/// kRowSumTolerance. Each row yields at most one range violation (the first
/// offending column) and at most one row-sum violation.
std::vector<Violation> validate_tensor(const AttentionTensor& t);

/// Writes "sample_id<TAB>layer<TAB>head<TAB>row<TAB>detail" per violation.
void write_violations(std::ostream& out, const std::string& sample_id,
                      const std::vector<Violation>& violations);

/// Stored distance for i < j is 1 - max(W_ij, W_ji); the diagonal is ignored.
/// Throws std::invalid_argument if an off-diagonal value lies outside
/// [-kRangeSlack, 1 + kRangeSlack] or is NaN.
DistanceMatrix symmetrize(std::span<const float> head_matrix, std::size_t tokens);

}  // namespace attntopo
