#include "attntopo/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace attntopo {

FeatureMatrix FeatureMatrix::from_vectors(std::span<const FeatureVector> vectors) {
  const std::size_t cols = vectors.empty() ? 0 : vectors.front().values.size();
  FeatureMatrix x(vectors.size(), cols);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].values.size() != cols) {
      throw DataError("sample " + vectors[i].sample_id + " has " +
                      std::to_string(vectors[i].values.size()) + " features, expected " +
                      std::to_string(cols));
    }
    std::copy(vectors[i].values.begin(), vectors[i].values.end(), x.row(i).begin());
  }
  return x;
}

std::vector<std::uint8_t> labels_of(std::span<const FeatureVector> vectors) {
  std::vector<std::uint8_t> y;
  y.reserve(vectors.size());
  for (const auto& v : vectors) y.push_back(v.label);
  return y;
}

SplitIndices stratified_split(std::span<const std::uint8_t> labels, double train_fraction,
                              std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train fraction must lie strictly between 0 and 1");
  }
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) throw DataError("label at row " + std::to_string(i) + " is not binary");
    by_class[labels[i]].push_back(i);
  }
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].empty()) {
      throw DataError("cannot stratify: class " + std::to_string(c) + " has no samples");
    }
  }

  std::mt19937_64 rng(seed);
  SplitIndices out;
  for (auto& members : by_class) {
    // Fisher-Yates with raw engine output keeps the shuffle identical across
    // standard library implementations.
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[rng() % i]);
    }
    const auto n_train = static_cast<std::size_t>(
        std::lround(train_fraction * static_cast<double>(members.size())));
    out.train.insert(out.train.end(), members.begin(), members.begin() + n_train);
    out.test.insert(out.test.end(), members.begin() + n_train, members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

StandardizationStats fit_standardizer(const FeatureMatrix& x) {
  if (x.rows() < 2) throw DataError("standardization needs at least two training samples");
  const double n = static_cast<double>(x.rows());
  StandardizationStats stats{std::vector<double>(x.cols(), 0.0), std::vector<double>(x.cols(), 0.0)};
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) stats.means[j] += x(i, j);
  }
  for (double& m : stats.means) m /= n;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double d = x(i, j) - stats.means[j];
      stats.stds[j] += d * d;
    }
  }
  for (double& s : stats.stds) s = std::sqrt(s / n);
  return stats;
}

FeatureMatrix apply_standardizer(const StandardizationStats& stats, const FeatureMatrix& x) {
  if (stats.means.size() != x.cols() || stats.stds.size() != x.cols()) {
    throw DataError("standardizer has " + std::to_string(stats.means.size()) +
                    " features, input has " + std::to_string(x.cols()));
  }
  FeatureMatrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (stats.stds[j] > 0.0) out(i, j) = (x(i, j) - stats.means[j]) / stats.stds[j];
    }
  }
  return out;
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double objective_only(const FeatureMatrix& x, std::span<const std::uint8_t> y,
                      std::span<const double> sw, double lambda, std::span<const double> w,
                      double b) {
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double z = dot(x.row(i), w) + b;
    const double li = y[i] ? softplus(-z) : softplus(z);
    loss += (sw.empty() ? 1.0 : sw[i]) * li;
  }
  loss /= static_cast<double>(x.rows());
  return loss + 0.5 * lambda * dot(w, w);
}

[[noreturn]] void throw_non_finite(const FeatureMatrix& x, std::span<const double> w,
                                   const char* when) {
  for (std::size_t j = 0; j < x.cols(); ++j) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (!std::isfinite(x(i, j))) {
        throw NumericError(std::string("non-finite loss ") + when + ": feature " +
                           std::to_string(j) + " holds a non-finite value at row " +
                           std::to_string(i));
      }
    }
  }
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (!std::isfinite(w[j])) {
      throw NumericError(std::string("non-finite loss ") + when + ": weight of feature " +
                         std::to_string(j) + " diverged");
    }
  }
  throw NumericError(std::string("non-finite loss ") + when);
}

}  // namespace

LossAndGradient logistic_objective(const FeatureMatrix& x, std::span<const std::uint8_t> y,
                                   std::span<const double> sample_weights, double lambda,
                                   std::span<const double> weights, double bias) {
  LossAndGradient out;
  out.grad_weights.assign(x.cols(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    const double z = dot(row, weights) + bias;
    const double s = sample_weights.empty() ? 1.0 : sample_weights[i];
    out.loss += s * (y[i] ? softplus(-z) : softplus(z));
    const double r = s * (sigmoid(z) - static_cast<double>(y[i]));
    for (std::size_t j = 0; j < row.size(); ++j) out.grad_weights[j] += r * row[j];
    out.grad_bias += r;
  }
  out.loss /= static_cast<double>(x.rows());
  out.grad_bias *= inv_n;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    out.grad_weights[j] = out.grad_weights[j] * inv_n + lambda * weights[j];
  }
  out.loss += 0.5 * lambda * dot(weights, weights);
  return out;
}

TrainResult train_logreg(const FeatureMatrix& x, std::span<const std::uint8_t> y,
                         const TrainOptions& options) {
  if (x.rows() == 0) throw DataError("no training samples");
  if (y.size() != x.rows()) throw DataError("label count does not match sample count");
  if (!(options.lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  for (auto label : y) {
    if (label > 1) throw DataError("training labels must be 0 or 1");
  }

  std::vector<double> sw;
  if (options.balance_classes) {
    const double n = static_cast<double>(y.size());
    const auto n1 = static_cast<double>(std::count(y.begin(), y.end(), 1));
    const double n0 = n - n1;
    sw.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double nc = y[i] ? n1 : n0;
      sw[i] = n / (2.0 * nc);
    }
  }

  // Curvature of the logistic term is at most 1/4 times the feature's second
  // moment; dividing by that bound plus lambda equalizes step scales.
  const std::size_t d = x.cols();
  std::vector<double> precond(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double m2 = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) m2 += x(i, j) * x(i, j);
    m2 /= static_cast<double>(x.rows());
    const double curvature = 0.25 * m2 + options.lambda;
    if (curvature > 0.0) precond[j] = 1.0 / curvature;
  }
  const double precond_bias = 4.0;

  TrainResult result;
  LinearModel& model = result.model;
  model.weights.assign(d, 0.0);
  model.bias = 0.0;
  model.lambda = options.lambda;

  constexpr double kArmijo = 1e-4;
  constexpr double kMinStep = 1e-20;

  auto current = logistic_objective(x, y, sw, options.lambda, model.weights, model.bias);
  if (!std::isfinite(current.loss)) throw_non_finite(x, model.weights, "at start");
  result.loss_history.push_back(current.loss);

  std::vector<double> direction(d), trial(d);
  double step = 1.0;
  std::size_t iter = 0;
  for (; iter < options.max_iters; ++iter) {
    double gmax = std::abs(current.grad_bias);
    for (double g : current.grad_weights) gmax = std::max(gmax, std::abs(g));
    if (gmax < options.tol) {
      result.converged = true;
      break;
    }
    double slope = 0.0;  // directional derivative, negative
    for (std::size_t j = 0; j < d; ++j) {
      direction[j] = -precond[j] * current.grad_weights[j];
      slope += direction[j] * current.grad_weights[j];
    }
    const double dir_bias = -precond_bias * current.grad_bias;
    slope += dir_bias * current.grad_bias;

    step = std::min(1.0, step * 2.0);
    double trial_loss = 0.0;
    for (;;) {
      for (std::size_t j = 0; j < d; ++j) trial[j] = model.weights[j] + step * direction[j];
      trial_loss = objective_only(x, y, sw, options.lambda, trial, model.bias + step * dir_bias);
      if (std::isfinite(trial_loss) && trial_loss <= current.loss + kArmijo * step * slope) break;
      step *= 0.5;
      if (step < kMinStep) break;
    }
    if (step < kMinStep) {
      if (!std::isfinite(trial_loss)) throw_non_finite(x, trial, "during line search");
      break;  // no descent possible at machine precision
    }
    model.weights.swap(trial);
    model.bias += step * dir_bias;
    current = logistic_objective(x, y, sw, options.lambda, model.weights, model.bias);
    if (!std::isfinite(current.loss)) throw_non_finite(x, model.weights, "after step");
    result.loss_history.push_back(current.loss);
  }
  if (!result.converged && iter == options.max_iters) {
    double gmax = std::abs(current.grad_bias);
    for (double g : current.grad_weights) gmax = std::max(gmax, std::abs(g));
    result.converged = gmax < options.tol;
  }
  result.iterations = iter;
  result.final_loss = current.loss;
  return result;
}

std::vector<double> predict(const LinearModel& model, const FeatureMatrix& raw) {
  if (raw.cols() != model.weights.size()) {
    throw DataError("model expects " + std::to_string(model.weights.size()) +
                    " features, input has " + std::to_string(raw.cols()));
  }
  const FeatureMatrix x =
      model.stats.means.empty() ? raw : apply_standardizer(model.stats, raw);
  std::vector<double> p(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) p[i] = sigmoid(dot(x.row(i), model.weights) + model.bias);
  return p;
}

std::vector<std::uint8_t> classify(std::span<const double> probabilities, double threshold) {
  std::vector<std::uint8_t> out;
  out.reserve(probabilities.size());
  for (double p : probabilities) out.push_back(p >= threshold ? 1 : 0);
  return out;
}

EvalReport evaluate(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth) {
  if (predicted.empty()) throw DataError("cannot evaluate an empty prediction set");
  if (predicted.size() != truth.size()) {
    throw DataError("prediction count " + std::to_string(predicted.size()) +
                    " does not match label count " + std::to_string(truth.size()));
  }
  EvalReport r;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] > 1 || truth[i] > 1) throw DataError("labels must be 0 or 1");
    if (truth[i]) {
      predicted[i] ? ++r.tp : ++r.fn;
    } else {
      predicted[i] ? ++r.fp : ++r.tn;
    }
  }
  const auto total = static_cast<double>(predicted.size());
  r.accuracy = static_cast<double>(r.tp + r.tn) / total;
  const std::size_t f1_den = 2 * r.tp + r.fp + r.fn;
  r.f1 = f1_den == 0 ? 0.0 : static_cast<double>(2 * r.tp) / static_cast<double>(f1_den);
  return r;
}

std::string EvalReport::machine_line() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "f1=%.9g accuracy=%.9g tp=%zu fp=%zu tn=%zu fn=%zu", f1, accuracy,
                tp, fp, tn, fn);
  return buf;
}

std::string EvalReport::human_text() const {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "F1 score:  %.4f\nAccuracy:  %.4f\nConfusion: tp=%zu fp=%zu tn=%zu fn=%zu (n=%zu)\n",
                f1, accuracy, tp, fp, tn, fn, tp + fp + tn + fn);
  return buf;
}

}  // namespace attntopo
