#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "netdeconf/matrix.hpp"
#include "netdeconf/sparse.hpp"

namespace netdeconf {

using Edge = std::pair<std::size_t, std::size_t>;

/// Undirected, unweighted network on nodes 0..n-1.
///
/// Input edges are symmetrized and deduplicated: (i, j) and (j, i) describe
/// the same edge. Self-loops are rejected; the normalized adjacency adds them
/// itself.
class Network {
 public:
  Network() = default;
  Network(std::size_t n, std::span<const Edge> edges);

  std::size_t node_count() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  /// Canonical edge list: i < j, lexicographically sorted.
  std::span<const Edge> edges() const noexcept { return edges_; }
  /// Sorted neighbor ids of node i.
  std::span<const std::size_t> neighbors(std::size_t i) const;
  std::size_t degree(std::size_t i) const { return neighbors(i).size(); }
  double mean_degree() const;

  /// Same graph after relabeling node i as perm[i].
  Network permuted(std::span<const std::size_t> perm) const;

  friend bool operator==(const Network& a, const Network& b) { return a.n_ == b.n_ && a.edges_ == b.edges_; }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::size_t> adjacency_;
};

/// Raw 0/1 adjacency A (no self-loops).
SparseMatrix adjacency_matrix(const Network& net);

/// D̃^{-1/2}(A + I)D̃^{-1/2} with D̃ the degree matrix of A + I.
SparseMatrix normalize_adjacency(const Network& net);

/// Row i is the sum of rows j of `r` over neighbors j of i (raw A, no
/// self-loop, no normalization).
DenseMatrix neighbor_sum(const Network& net, const DenseMatrix& r);

}  // namespace netdeconf
