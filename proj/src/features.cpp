#include "attntopo/features.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "attntopo/parallel.hpp"

namespace attntopo {

double entropy_log(double x) { return std::log(x); }

double persistence_entropy(const PersistenceDiagram& dgm) {
  double total = 0.0;
  for (const auto& p : dgm.pairs) total += p.lifespan();
  if (!(total > 0.0)) return 0.0;
  double h = 0.0;
  for (const auto& p : dgm.pairs) {
    const double l = p.lifespan();
    if (l <= 0.0) continue;
    const double q = l / total;
    h -= q * entropy_log(q);
  }
  // Rounding can leave a tiny negative value when one bar carries everything.
  return std::max(h, 0.0);
}

DiagramFeatures diagram_features(const PersistenceDiagram& dgm) {
  DiagramFeatures f;
  if (dgm.empty()) return f;
  const double k = static_cast<double>(dgm.size());
  double sum = 0.0;
  double max = 0.0;
  for (const auto& p : dgm.pairs) {
    sum += p.lifespan();
    max = std::max(max, p.lifespan());
  }
  const double mean = sum / k;
  double sq = 0.0;
  for (const auto& p : dgm.pairs) {
    const double d = p.lifespan() - mean;
    sq += d * d;
  }
  f.mean_lifespan = mean;
  f.var_lifespan = sq / k;
  f.max_lifespan = max;
  f.point_count = k;
  f.entropy = persistence_entropy(dgm);
  return f;
}

HeadSelection parse_head_selection(const std::string& text) {
  HeadSelection out;
  if (text.empty() || text == "all") return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    auto parse = [&](const std::string& part) -> std::size_t {
      if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos ||
          part.size() > 5) {
        throw std::invalid_argument("bad head selector '" + item + "', expected layer:head");
      }
      return std::stoul(part);
    };
    if (colon == std::string::npos) {
      throw std::invalid_argument("bad head selector '" + item + "', expected layer:head");
    }
    out.emplace_back(parse(item.substr(0, colon)), parse(item.substr(colon + 1)));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::array<double, kFeaturesPerHead> head_features(std::span<const float> head_matrix,
                                                   std::size_t tokens,
                                                   bool drop_zero_persistence) {
  auto [h0, h1] = compute_diagrams(symmetrize(head_matrix, tokens));
  if (drop_zero_persistence) {
    h0 = attntopo::drop_zero_persistence(std::move(h0));
    h1 = attntopo::drop_zero_persistence(std::move(h1));
  }
  std::array<double, kFeaturesPerHead> out{};
  const auto f0 = diagram_features(h0).as_array();
  const auto f1 = diagram_features(h1).as_array();
  std::copy(f0.begin(), f0.end(), out.begin());
  std::copy(f1.begin(), f1.end(), out.begin() + kFeaturesPerDiagram);
  return out;
}

namespace {

HeadSelection resolve_heads(const Sample& s, const HeadSelection& requested) {
  const auto& t = s.tensor;
  if (requested.empty()) {
    HeadSelection all;
    all.reserve(t.layers() * t.heads());
    for (std::size_t l = 0; l < t.layers(); ++l) {
      for (std::size_t h = 0; h < t.heads(); ++h) all.emplace_back(l, h);
    }
    return all;
  }
  for (const auto& [l, h] : requested) {
    if (l >= t.layers() || h >= t.heads()) {
      throw std::invalid_argument("sample " + s.id + ": head " + std::to_string(l) + ":" +
                                  std::to_string(h) + " does not exist (tensor has " +
                                  std::to_string(t.layers()) + " layers, " +
                                  std::to_string(t.heads()) + " heads)");
    }
  }
  return requested;
}

void check_valid(const Sample& s) {
  const auto violations = validate_tensor(s.tensor);
  if (!violations.empty()) {
    const auto& v = violations.front();
    throw std::invalid_argument("sample " + s.id + ": invalid attention at layer " +
                                std::to_string(v.layer) + " head " + std::to_string(v.head) +
                                " row " + std::to_string(v.row) + ": " + v.detail());
  }
}

}  // namespace

FeatureVector featurize_sample(const Sample& s, const FeaturizeOptions& options) {
  check_valid(s);
  const HeadSelection heads = resolve_heads(s, options.heads);
  FeatureVector fv{s.id, s.label, std::vector<double>(heads.size() * kFeaturesPerHead)};
  for (std::size_t slot = 0; slot < heads.size(); ++slot) {
    const auto [l, h] = heads[slot];
    const auto values =
        head_features(s.tensor.head(l, h), s.tensor.tokens(), options.drop_zero_persistence);
    std::copy(values.begin(), values.end(), fv.values.begin() + slot * kFeaturesPerHead);
  }
  return fv;
}

std::vector<FeatureVector> featurize_samples(std::span<const Sample> samples,
                                             const FeaturizeOptions& options) {
  std::vector<FeatureVector> out(samples.size());
  // One task per (sample, head) so a single large sample still spreads across
  // workers.
  struct Task {
    std::size_t sample;
    std::size_t slot;
    std::size_t layer;
    std::size_t head;
  };
  std::vector<Task> tasks;
  std::vector<std::atomic<std::size_t>> pending(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    check_valid(s);
    const HeadSelection heads = resolve_heads(s, options.heads);
    out[i] = {s.id, s.label, std::vector<double>(heads.size() * kFeaturesPerHead)};
    if (i > 0 && out[i].values.size() != out[0].values.size()) {
      throw std::invalid_argument("sample " + s.id + " yields " +
                                  std::to_string(out[i].values.size()) +
                                  " features, earlier samples yield " +
                                  std::to_string(out[0].values.size()));
    }
    pending[i].store(heads.size());
    for (std::size_t slot = 0; slot < heads.size(); ++slot) {
      tasks.push_back({i, slot, heads[slot].first, heads[slot].second});
    }
  }

  std::atomic<std::size_t> done_samples{0};
  auto finish_sample = [&] {
    const std::size_t done = done_samples.fetch_add(1) + 1;
    if (options.on_sample_done) options.on_sample_done(done);
  };
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (pending[i].load() == 0) finish_sample();
  }

  parallel_for(tasks.size(), options.threads, [&](std::size_t t) {
    const Task& task = tasks[t];
    const Sample& s = samples[task.sample];
    const auto values = head_features(s.tensor.head(task.layer, task.head), s.tensor.tokens(),
                                      options.drop_zero_persistence);
    std::copy(values.begin(), values.end(),
              out[task.sample].values.begin() + task.slot * kFeaturesPerHead);
    if (pending[task.sample].fetch_sub(1) == 1) finish_sample();
  });
  return out;
}

}  // namespace attntopo
