#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "attntopo/distance_matrix.hpp"
#include "attntopo/filtration.hpp"

namespace attntopo {

/// Death assigned to the single essential dim-0 class. Filtration values
/// never exceed 1, so this is the diameter of every input.
inline constexpr double kEssentialDeath = 1.0;

struct PersistencePair {
  double birth = 0.0;
  double death = 0.0;
  std::uint8_t dim = 0;

  double lifespan() const noexcept { return death - birth; }

  friend bool operator==(const PersistencePair&, const PersistencePair&) = default;
  friend bool operator<(const PersistencePair& a, const PersistencePair& b) noexcept {
    if (a.dim != b.dim) return a.dim < b.dim;
    if (a.birth != b.birth) return a.birth < b.birth;
    return a.death < b.death;
  }
};

struct PersistenceDiagram {
  std::uint8_t dim = 0;
  std::vector<PersistencePair> pairs;

  std::size_t size() const noexcept { return pairs.size(); }
  bool empty() const noexcept { return pairs.empty(); }

  /// Pairs sorted by (birth, death); two diagrams are equal as multisets iff
  /// their sorted forms compare equal.
  std::vector<PersistencePair> sorted() const;
};

using DiagramPair = std::pair<PersistenceDiagram, PersistenceDiagram>;

/// Union-find over edges in filtration order. Returns n pairs: one (0, d) per
/// merge plus the essential (0, kEssentialDeath).
PersistenceDiagram compute_h0(const DistanceMatrix& m);

/// Dimension-1 pairs of a flag filtration. Reduces the coboundary matrix of
/// the edges, skipping edges already known to kill a component, which yields
/// the same pairing as reducing the boundary matrix.
PersistenceDiagram compute_h1(const FilteredComplex& fc);

DiagramPair compute_diagrams(const DistanceMatrix& m);

/// Removes pairs with birth == death.
PersistenceDiagram drop_zero_persistence(PersistenceDiagram dgm);

/// One "dim birth death" line per pair, 9 significant digits.
void write_diagram(std::ostream& out, const PersistenceDiagram& dgm);

}  // namespace attntopo
