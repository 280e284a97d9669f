#pragma once

#include <cstdint>
#include <vector>

#include "attntopo/attention.hpp"

namespace attntopo {

struct SynthOptions {
  std::size_t samples = 400;
  std::uint64_t seed = 1;
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t tokens = 30;
};

/// Two-class row-stochastic attention tensors. Odd-indexed samples (label 1)
/// put most of each row's mass on the two neighbours along a random token
/// cycle, so the symmetrized head carries a long-lived 1-cycle; even-indexed
/// samples (label 0) get diffuse noisy attention. Throws
/// std::invalid_argument when samples < 2 or tokens < 4.
std::vector<Sample> generate_synthetic(const SynthOptions& options);

}  // namespace attntopo
