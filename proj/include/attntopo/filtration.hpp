#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "attntopo/distance_matrix.hpp"

namespace attntopo {

using Vertex = std::uint32_t;

struct Simplex {
  double value = 0.0;
  std::uint8_t dim = 0;
  // Strictly increasing; entries past `dim` are unused and kept at 0.
  std::array<Vertex, 3> vertices{};

  std::span<const Vertex> verts() const noexcept {
    return {vertices.data(), static_cast<std::size_t>(dim) + 1};
  }

  friend bool operator==(const Simplex&, const Simplex&) = default;
};

/// Filtration order: value ascending, then dimension, then vertex tuple.
inline bool filtration_less(const Simplex& a, const Simplex& b) noexcept {
  if (a.value != b.value) return a.value < b.value;
  if (a.dim != b.dim) return a.dim < b.dim;
  return a.vertices < b.vertices;
}

/// Flag complex of a distance matrix, truncated at dimension 2, as a sorted
/// simplex stream.
struct FilteredComplex {
  std::size_t n = 0;
  std::vector<Simplex> simplices;

  std::size_t count(std::uint8_t dim) const noexcept;
};

FilteredComplex build_filtration(const DistanceMatrix& m);

}  // namespace attntopo
