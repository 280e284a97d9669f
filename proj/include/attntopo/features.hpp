#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attntopo/attention.hpp"
#include "attntopo/persistence.hpp"

namespace attntopo {

inline constexpr std::size_t kFeaturesPerDiagram = 5;
inline constexpr std::size_t kFeaturesPerHead = 2 * kFeaturesPerDiagram;

/// Natural log. Swap here to change the entropy base everywhere.
double entropy_log(double x);

struct DiagramFeatures {
  double mean_lifespan = 0.0;
  double var_lifespan = 0.0;  // population variance
  double max_lifespan = 0.0;
  double point_count = 0.0;
  double entropy = 0.0;

  std::array<double, kFeaturesPerDiagram> as_array() const {
    return {mean_lifespan, var_lifespan, max_lifespan, point_count, entropy};
  }
};

/// -sum p_i log p_i with p_i = lifespan_i / total lifespan. Zero-lifespan pairs
/// contribute nothing; an empty diagram or zero total gives 0.
double persistence_entropy(const PersistenceDiagram& dgm);

/// Statistics over all pairs, including the capped essential pair and any
/// zero-persistence pairs. Empty diagram gives all zeros.
DiagramFeatures diagram_features(const PersistenceDiagram& dgm);

/// (layer, head) pairs to featurize, ascending. Empty means every head.
using HeadSelection = std::vector<std::pair<std::size_t, std::size_t>>;

/// Parses "l:h,l:h,..." (or "all"). Result is sorted and deduplicated.
/// Throws std::invalid_argument on malformed input.
HeadSelection parse_head_selection(const std::string& text);

struct FeaturizeOptions {
  HeadSelection heads;
  bool drop_zero_persistence = false;
  std::size_t threads = 1;
  // Called with the number of finished samples, from any worker thread.
  std::function<void(std::size_t)> on_sample_done;
};

/// values[((slot * 2) + dim) * 5 + feature] where slot is the position of the
/// (layer, head) in the selection (layer-major over all heads by default) and
/// feature order is mean, var, max, count, entropy.
struct FeatureVector {
  std::string sample_id;
  std::uint8_t label = 0;
  std::vector<double> values;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Features of one head: dim-0 block then dim-1 block.
std::array<double, kFeaturesPerHead> head_features(std::span<const float> head_matrix,
                                                   std::size_t tokens,
                                                   bool drop_zero_persistence = false);

/// Throws std::invalid_argument if the tensor fails validation or a selected
/// head does not exist.
FeatureVector featurize_sample(const Sample& s, const FeaturizeOptions& options = {});

/// Output order follows input order regardless of thread count.
std::vector<FeatureVector> featurize_samples(std::span<const Sample> samples,
                                             const FeaturizeOptions& options = {});

}  // namespace attntopo
