#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace attntopo {

inline constexpr std::size_t kMaxTokens = 512;

/// Symmetric n x n matrix of distances in [0, 1] with an implicit zero
/// diagonal. Only the strict upper triangle is stored, row-major.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;

  /// All off-diagonal distances set to `fill`.
  explicit DistanceMatrix(std::size_t n, double fill = 0.0);

  /// Takes ownership of an upper-triangular array of n(n-1)/2 values.
  /// Throws std::invalid_argument if the size or any value is out of range.
  DistanceMatrix(std::size_t n, std::vector<double> upper);

  std::size_t size() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return d_.size(); }

  double operator()(std::size_t i, std::size_t j) const noexcept {
    if (i == j) return 0.0;
    return i < j ? d_[index(i, j)] : d_[index(j, i)];
  }

  /// Sets d(i, j) = d(j, i). Requires i != j and value in [0, 1].
  void set(std::size_t i, std::size_t j, double value);

  const std::vector<double>& upper() const noexcept { return d_; }

  /// Position of the pair i < j in the upper-triangular storage.
  std::size_t index(std::size_t i, std::size_t j) const noexcept {
    return i * n_ - i * (i + 1) / 2 + (j - i - 1);
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
};

}  // namespace attntopo
