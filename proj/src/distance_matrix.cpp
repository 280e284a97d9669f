#include "attntopo/distance_matrix.hpp"

#include <cmath>
#include <string>

namespace attntopo {
namespace {

void check_size(std::size_t n) {
  if (n == 0 || n > kMaxTokens) {
    throw std::invalid_argument("distance matrix size " + std::to_string(n) +
                                " outside [1, " + std::to_string(kMaxTokens) + "]");
  }
}

void check_value(double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument("distance " + std::to_string(v) + " outside [0, 1]");
  }
}

}  // namespace

DistanceMatrix::DistanceMatrix(std::size_t n, double fill) : n_(n) {
  check_size(n);
  check_value(fill);
  d_.assign(n * (n - 1) / 2, fill);
}

DistanceMatrix::DistanceMatrix(std::size_t n, std::vector<double> upper)
    : n_(n), d_(std::move(upper)) {
  check_size(n);
  if (d_.size() != n * (n - 1) / 2) {
    throw std::invalid_argument("expected " + std::to_string(n * (n - 1) / 2) +
                                " upper-triangular distances, got " +
                                std::to_string(d_.size()));
  }
  for (double v : d_) check_value(v);
}

void DistanceMatrix::set(std::size_t i, std::size_t j, double value) {
  if (i == j || i >= n_ || j >= n_) {
    throw std::invalid_argument("invalid distance index pair");
  }
  check_value(value);
  d_[i < j ? index(i, j) : index(j, i)] = value;
}

}  // namespace attntopo
