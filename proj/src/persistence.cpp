#include "attntopo/persistence.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "union_find.hpp"

namespace attntopo {
namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

std::size_t choose2(std::size_t x) { return x < 2 ? 0 : x * (x - 1) / 2; }
std::size_t choose3(std::size_t x) { return x < 3 ? 0 : x * (x - 1) * (x - 2) / 6; }

// Colexicographic rank of a triangle i < j < k.
std::size_t triangle_rank(Vertex i, Vertex j, Vertex k) {
  return choose3(k) + choose2(j) + i;
}

void sorted_insert3(Vertex a, Vertex b, Vertex c, Vertex out[3]) {
  out[0] = a;
  out[1] = b;
  out[2] = c;
  std::sort(out, out + 3);
}

// Symmetric difference of two ascending index lists, written into `out`.
void add_columns(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b,
                 std::vector<std::uint32_t>& out) {
  out.clear();
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      out.push_back(*ia++);
    } else if (*ib < *ia) {
      out.push_back(*ib++);
    } else {
      ++ia;
      ++ib;
    }
  }
  out.insert(out.end(), ia, a.end());
  out.insert(out.end(), ib, b.end());
}

}  // namespace

std::vector<PersistencePair> PersistenceDiagram::sorted() const {
  std::vector<PersistencePair> out = pairs;
  std::sort(out.begin(), out.end());
  return out;
}

PersistenceDiagram compute_h0(const DistanceMatrix& m) {
  const std::size_t n = m.size();
  struct Edge {
    double value;
    Vertex u, v;
  };
  std::vector<Edge> edges;
  edges.reserve(m.edge_count());
  for (Vertex i = 0; i < n; ++i) {
    for (Vertex j = i + 1; j < n; ++j) edges.push_back({m(i, j), i, j});
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.value != b.value) return a.value < b.value;
    if (a.u != b.u) return a.u < b.u;
    return a.v < b.v;
  });

  PersistenceDiagram dgm;
  dgm.dim = 0;
  dgm.pairs.reserve(n);
  detail::UnionFind components(n);
  for (const Edge& e : edges) {
    if (components.unite(e.u, e.v)) {
      dgm.pairs.push_back({0.0, e.value, 0});
      if (dgm.pairs.size() + 1 == n) break;
    }
  }
  dgm.pairs.push_back({0.0, kEssentialDeath, 0});
  return dgm;
}

namespace {

// Vertices packed 9 bits each (n <= 512); integer order is lexicographic
// order on the sorted vertex tuple.
constexpr std::uint32_t pack(Vertex i, Vertex j, Vertex k = 0) { return i << 18 | j << 9 | k; }

// Position of a simplex among those of its dimension in filtration order.
struct OrderKey {
  double value;
  std::uint32_t lex;

  friend bool operator<(const OrderKey& a, const OrderKey& b) noexcept {
    return a.value != b.value ? a.value < b.value : a.lex < b.lex;
  }
};

// Dimension-1 persistence of the flag filtration of a distance matrix,
// computed by reducing edge coboundaries in reverse filtration order.
//
// The filtration is never materialized. Pairs whose death lies inside a
// prefix (all simplices up to some value) are exactly the pairs of the prefix
// complex, so only the prefix is reduced. Every positive edge left unpaired
// there must form an apparent pair with its earliest coface (it is the latest
// facet of that triangle), which is always a true persistence pair. If some
// edge does not, the prefix grows and the reduction is repeated.
class CoboundaryReducer {
 public:
  explicit CoboundaryReducer(const DistanceMatrix& m) : m_(m), n_(m.size()) {
    edge_order_.reserve(m.edge_count());
    for (Vertex i = 0; i < n_; ++i) {
      for (Vertex j = i + 1; j < n_; ++j) edge_order_.push_back({m(i, j), pack(i, j)});
    }
    std::sort(edge_order_.begin(), edge_order_.end());
    edge_index_.assign(m.edge_count(), kNone);
    cleared_.assign(edge_order_.size(), false);
    detail::UnionFind components(n_);
    for (std::uint32_t idx = 0; idx < edge_order_.size(); ++idx) {
      const auto [u, v] = unpack_edge(edge_order_[idx].lex);
      edge_index_[m.index(u, v)] = idx;
      // Edges that merge two components are paired with vertices; their
      // coboundary columns reduce to zero and are cleared.
      if (components.unite(u, v)) cleared_[idx] = true;
    }
  }

  PersistenceDiagram run() {
    const std::size_t triangles = choose3(n_);
    std::vector<double> values;
    values.reserve(triangles);
    for (Vertex i = 0; i < n_; ++i) {
      for (Vertex j = i + 1; j < n_; ++j) {
        for (Vertex k = j + 1; k < n_; ++k) values.push_back(triangle_value(i, j, k));
      }
    }
    std::size_t target = std::max<std::size_t>(1, edge_order_.size());
    for (;;) {
      double threshold = std::numeric_limits<double>::infinity();
      if (target < triangles) {
        std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(target),
                         values.end());
        threshold = values[target];
      }
      PersistenceDiagram dgm;
      dgm.dim = 1;
      if (reduce_prefix(threshold, dgm) || target >= triangles) return dgm;
      target *= 4;
    }
  }

 private:
  static std::pair<Vertex, Vertex> unpack_edge(std::uint32_t lex) {
    return {lex >> 18, (lex >> 9) & 0x1ff};
  }

  double triangle_value(Vertex i, Vertex j, Vertex k) const {
    return std::max({m_(i, j), m_(i, k), m_(j, k)});
  }

  std::uint32_t edge_index(Vertex a, Vertex b) const {
    return a < b ? edge_index_[m_.index(a, b)] : edge_index_[m_.index(b, a)];
  }

  // Reduces every edge and triangle with value <= threshold. Returns false if
  // some positive edge is unpaired there and not apparent.
  bool reduce_prefix(double threshold, PersistenceDiagram& dgm) {
    // Prefix triangles in filtration order; columns hold indices into it.
    std::vector<OrderKey> prefix;
    std::vector<std::uint32_t> prefix_rank;
    for (Vertex k = 2; k < n_; ++k) {
      for (Vertex j = 1; j < k; ++j) {
        for (Vertex i = 0; i < j; ++i) {
          const double v = triangle_value(i, j, k);
          if (v <= threshold) prefix.push_back({v, pack(i, j, k)});
        }
      }
    }
    std::sort(prefix.begin(), prefix.end());
    position_.assign(choose3(n_), kNone);
    for (std::uint32_t p = 0; p < prefix.size(); ++p) {
      const std::uint32_t lex = prefix[p].lex;
      position_[triangle_rank(lex >> 18, (lex >> 9) & 0x1ff, lex & 0x1ff)] = p;
    }

    std::vector<std::uint32_t> pivot_owner(prefix.size(), kNone);
    std::vector<std::vector<std::uint32_t>> reduced;
    std::vector<std::uint32_t> column, scratch;

    for (std::size_t idx = edge_order_.size(); idx-- > 0;) {
      if (cleared_[idx]) continue;
      const OrderKey& edge = edge_order_[idx];
      const auto [u, v] = unpack_edge(edge.lex);

      OrderKey earliest{std::numeric_limits<double>::infinity(), 0};
      Vertex earliest_w = 0;
      column.clear();
      for (Vertex w = 0; w < n_; ++w) {
        if (w == u || w == v) continue;
        Vertex t[3];
        sorted_insert3(u, v, w, t);
        const OrderKey key{std::max({edge.value, m_(u, w), m_(v, w)}), pack(t[0], t[1], t[2])};
        if (key < earliest) {
          earliest = key;
          earliest_w = w;
        }
        if (key.value <= threshold) column.push_back(position_[triangle_rank(t[0], t[1], t[2])]);
      }

      if (edge.value <= threshold) {
        std::sort(column.begin(), column.end());
        // The pivot of a coboundary column is its earliest coface.
        while (!column.empty() && pivot_owner[column.front()] != kNone) {
          add_columns(column, reduced[pivot_owner[column.front()]], scratch);
          column.swap(scratch);
        }
        if (!column.empty()) {
          pivot_owner[column.front()] = static_cast<std::uint32_t>(reduced.size());
          dgm.pairs.push_back({edge.value, prefix[column.front()].value, 1});
          reduced.push_back(column);
          continue;
        }
      }
      // Unpaired within the prefix, so the death lies beyond it.
      const std::uint32_t latest_facet = std::max(
          {static_cast<std::uint32_t>(idx), edge_index(u, earliest_w), edge_index(v, earliest_w)});
      if (latest_facet != idx) return false;
      dgm.pairs.push_back({edge.value, earliest.value, 1});
    }
    return true;
  }

  const DistanceMatrix& m_;
  std::size_t n_;
  std::vector<OrderKey> edge_order_;
  std::vector<std::uint32_t> edge_index_;  // upper-triangular index -> order
  std::vector<bool> cleared_;
  std::vector<std::uint32_t> position_;    // colex rank -> prefix position
};

PersistenceDiagram h1_of_distances(const DistanceMatrix& m) {
  if (m.size() < 3) {
    PersistenceDiagram dgm;
    dgm.dim = 1;
    return dgm;
  }
  return CoboundaryReducer(m).run();
}

}  // namespace

PersistenceDiagram compute_h1(const FilteredComplex& fc) {
  // A valid flag filtration is determined by its edge values: triangle values
  // are edge maxima and the order is (value, dim, vertices).
  if (fc.n == 0) throw std::invalid_argument("empty filtration");
  DistanceMatrix m(fc.n);
  for (const Simplex& s : fc.simplices) {
    if (s.dim == 1) m.set(s.vertices[0], s.vertices[1], s.value);
  }
  return h1_of_distances(m);
}

DiagramPair compute_diagrams(const DistanceMatrix& m) {
  // Same reduction compute_h1 runs after reading the edge values back out of
  // build_filtration(m); skipping the materialized filtration is bit-identical.
  return {compute_h0(m), h1_of_distances(m)};
}

PersistenceDiagram drop_zero_persistence(PersistenceDiagram dgm) {
  std::erase_if(dgm.pairs, [](const PersistencePair& p) { return p.birth == p.death; });
  return dgm;
}

void write_diagram(std::ostream& out, const PersistenceDiagram& dgm) {
  char buf[64];
  for (const PersistencePair& p : dgm.pairs) {
    std::snprintf(buf, sizeof buf, "%d %.9g %.9g\n", static_cast<int>(p.dim), p.birth, p.death);
    out << buf;
  }
}

}  // namespace attntopo
