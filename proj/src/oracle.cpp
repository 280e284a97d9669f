#include "attntopo/oracle.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace attntopo {
namespace {

using Column = std::vector<unsigned char>;

// Largest row index holding a 1, or -1 for an empty column.
long low(const Column& c) {
  for (long r = static_cast<long>(c.size()) - 1; r >= 0; --r) {
    if (c[static_cast<std::size_t>(r)]) return r;
  }
  return -1;
}

bool is_face(const Simplex& face, const Simplex& s) {
  if (face.dim + 1 != s.dim) return false;
  const auto fv = face.verts();
  const auto sv = s.verts();
  return std::includes(sv.begin(), sv.end(), fv.begin(), fv.end());
}

}  // namespace

DiagramPair oracle_reduction(const FilteredComplex& fc) {
  if (fc.n > kOracleMaxPoints) {
    throw std::invalid_argument("oracle_reduction accepts at most " +
                                std::to_string(kOracleMaxPoints) + " points, got " +
                                std::to_string(fc.n));
  }
  const auto& s = fc.simplices;
  const std::size_t total = s.size();

  std::vector<Column> boundary(total, Column(total, 0));
  for (std::size_t j = 0; j < total; ++j) {
    for (std::size_t i = 0; i < total; ++i) {
      if (is_face(s[i], s[j])) boundary[j][i] = 1;
    }
  }

  for (std::size_t j = 0; j < total; ++j) {
    bool changed = true;
    while (changed) {
      changed = false;
      const long lj = low(boundary[j]);
      if (lj < 0) break;
      for (std::size_t k = 0; k < j; ++k) {
        if (low(boundary[k]) == lj) {
          for (std::size_t r = 0; r < total; ++r) boundary[j][r] ^= boundary[k][r];
          changed = true;
          break;
        }
      }
    }
  }

  DiagramPair out;
  out.first.dim = 0;
  out.second.dim = 1;
  std::vector<bool> paired(total, false);
  for (std::size_t j = 0; j < total; ++j) {
    const long lj = low(boundary[j]);
    if (lj < 0) continue;
    const Simplex& creator = s[static_cast<std::size_t>(lj)];
    paired[static_cast<std::size_t>(lj)] = true;
    paired[j] = true;
    if (creator.dim == 0) {
      out.first.pairs.push_back({creator.value, s[j].value, 0});
    } else if (creator.dim == 1) {
      out.second.pairs.push_back({creator.value, s[j].value, 1});
    }
  }
  for (std::size_t i = 0; i < total; ++i) {
    if (paired[i]) continue;
    if (s[i].dim == 0) {
      out.first.pairs.push_back({s[i].value, kEssentialDeath, 0});
    } else if (s[i].dim == 1) {
      out.second.pairs.push_back({s[i].value, kEssentialDeath, 1});
    }
  }
  return out;
}

}  // namespace attntopo
