#pragma once

#include "attntopo/filtration.hpp"
#include "attntopo/persistence.hpp"

namespace attntopo {

inline constexpr std::size_t kOracleMaxPoints = 10;

/// Textbook reduction of the full boundary matrix over Z/2, with no clearing,
/// no twist, and no pivot lookup. Intended only as a reference for small
/// complexes; throws std::invalid_argument when fc.n > kOracleMaxPoints.
/// Unpaired classes die at kEssentialDeath.
DiagramPair oracle_reduction(const FilteredComplex& fc);

}  // namespace attntopo
