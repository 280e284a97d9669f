#include "attntopo/filtration.hpp"

#include <algorithm>

namespace attntopo {

std::size_t FilteredComplex::count(std::uint8_t dim) const noexcept {
  return static_cast<std::size_t>(std::count_if(
      simplices.begin(), simplices.end(), [dim](const Simplex& s) { return s.dim == dim; }));
}

namespace {

// Filtration value plus vertices packed 9 bits each (n <= 512), so integer
// order on `key` is lexicographic order on the vertex tuple.
struct Keyed {
  double value;
  std::uint32_t key;
};

bool keyed_less(const Keyed& a, const Keyed& b) {
  return a.value != b.value ? a.value < b.value : a.key < b.key;
}

constexpr std::uint32_t pack(Vertex i, Vertex j, Vertex k = 0) { return i << 18 | j << 9 | k; }

Simplex unpack(const Keyed& k, std::uint8_t dim) {
  return {k.value, dim, {k.key >> 18, (k.key >> 9) & 0x1ff, k.key & 0x1ff}};
}

}  // namespace

FilteredComplex build_filtration(const DistanceMatrix& m) {
  const std::size_t n = m.size();
  FilteredComplex fc;
  fc.n = n;

  std::vector<Keyed> edges;
  edges.reserve(n * (n - 1) / 2);
  for (Vertex i = 0; i < n; ++i) {
    for (Vertex j = i + 1; j < n; ++j) edges.push_back({m(i, j), pack(i, j)});
  }
  std::vector<Keyed> triangles;
  triangles.reserve(n < 3 ? 0 : n * (n - 1) * (n - 2) / 6);
  for (Vertex i = 0; i < n; ++i) {
    for (Vertex j = i + 1; j < n; ++j) {
      const double dij = m(i, j);
      for (Vertex k = j + 1; k < n; ++k) {
        triangles.push_back({std::max({dij, m(i, k), m(j, k)}), pack(i, j, k)});
      }
    }
  }
  std::sort(edges.begin(), edges.end(), keyed_less);
  std::sort(triangles.begin(), triangles.end(), keyed_less);

  // Vertices sit at value 0 with the lowest dimension, so they lead. Edges
  // and triangles are merged with edges first on equal values.
  fc.simplices.reserve(n + edges.size() + triangles.size());
  for (Vertex v = 0; v < n; ++v) fc.simplices.push_back({0.0, 0, {v, 0, 0}});
  auto e = edges.begin();
  auto t = triangles.begin();
  while (e != edges.end() || t != triangles.end()) {
    if (t == triangles.end() || (e != edges.end() && e->value <= t->value)) {
      fc.simplices.push_back(unpack(*e++, 1));
    } else {
      fc.simplices.push_back(unpack(*t++, 2));
    }
  }
  return fc;
}

}  // namespace attntopo
