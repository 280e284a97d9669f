#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "attntopo/errors.hpp"
#include "attntopo/features.hpp"

namespace attntopo {

/// Dense row-major sample-by-feature matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static FeatureMatrix from_vectors(std::span<const FeatureVector> vectors);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::vector<std::uint8_t> labels_of(std::span<const FeatureVector> vectors);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified split. Each class is shuffled with a seeded generator and
/// round(train_fraction * class size) of its members go to train. Both index
/// lists are ascending. Throws DataError if either class is absent and
/// std::invalid_argument if train_fraction is outside (0, 1).
SplitIndices stratified_split(std::span<const std::uint8_t> labels, double train_fraction,
                              std::uint64_t seed);

struct StandardizationStats {
  std::vector<double> means;
  std::vector<double> stds;  // population std; 0 marks a pass-through column
};

/// Throws DataError with fewer than two rows.
StandardizationStats fit_standardizer(const FeatureMatrix& x);
/// (x - mean) / std per column; zero-std columns are left unchanged.
FeatureMatrix apply_standardizer(const StandardizationStats& stats, const FeatureMatrix& x);

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  double lambda = 0.0;
  StandardizationStats stats;
};

struct TrainOptions {
  double lambda = 1e-3;
  std::size_t max_iters = 2000;
  double tol = 1e-6;
  // Inverse class-frequency sample weights.
  bool balance_classes = false;
};

struct TrainResult {
  LinearModel model;  // stats left empty by train_logreg
  double final_loss = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> loss_history;  // loss after each accepted step, starting at w = 0
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> grad_weights;
  double grad_bias = 0.0;
};

/// Weighted mean logistic loss plus (lambda / 2) * |w|^2; the bias is not
/// regularized. `sample_weights` may be empty (all ones).
LossAndGradient logistic_objective(const FeatureMatrix& x, std::span<const std::uint8_t> y,
                                   std::span<const double> sample_weights, double lambda,
                                   std::span<const double> weights, double bias);

/// Diagonally preconditioned gradient descent with Armijo backtracking on
/// already standardized features. Stops once the gradient max-norm drops
/// below tol or after max_iters steps. Throws NumericError on a non-finite
/// loss.
TrainResult train_logreg(const FeatureMatrix& x, std::span<const std::uint8_t> y,
                         const TrainOptions& options);

double sigmoid(double z) noexcept;

/// Standardizes with model.stats, then sigmoid(w.x + b). Throws DataError on a
/// feature-count mismatch.
std::vector<double> predict(const LinearModel& model, const FeatureMatrix& raw);
std::vector<std::uint8_t> classify(std::span<const double> probabilities, double threshold = 0.5);

struct EvalReport {
  double f1 = 0.0;
  double accuracy = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  /// `f1=<x> accuracy=<y> tp=.. fp=.. tn=.. fn=..`
  std::string machine_line() const;
  std::string human_text() const;
};

/// Positive class is label 1. Throws DataError on empty or mismatched input.
EvalReport evaluate(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth);

// Model file: header `ATTN-TOPO-MODEL v1` then key=value lines for lambda,
// bias, weights, means, stds; numbers at 17 significant digits.
void write_model(std::ostream& out, const LinearModel& model);
LinearModel read_model(std::istream& in);

}  // namespace attntopo
