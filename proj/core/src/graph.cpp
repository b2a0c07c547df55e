#include "netdeconf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "netdeconf/errors.hpp"

namespace netdeconf {

Network::Network(std::size_t n, std::span<const Edge> edges) : n_(n) {
  edges_.reserve(edges.size());
  for (auto [i, j] : edges) {
    require_shape(i < n && j < n, "Network: edge (" + std::to_string(i) + "," + std::to_string(j) +
                                      ") references a node outside 0.." + std::to_string(n) + "-1");
    if (i == j) throw ShapeError("Network: self-loop on node " + std::to_string(i));
    edges_.emplace_back(std::min(i, j), std::max(i, j));
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  std::vector<std::size_t> deg(n, 0);
  for (auto [i, j] : edges_) {
    ++deg[i];
    ++deg[j];
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + deg[i];
  adjacency_.resize(offsets_[n]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (auto [i, j] : edges_) {
    adjacency_[fill[i]++] = j;
    adjacency_[fill[j]++] = i;
  }
  for (std::size_t i = 0; i < n; ++i)
    std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
              adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]));
}

std::span<const std::size_t> Network::neighbors(std::size_t i) const {
  require_shape(i < n_, "Network::neighbors: node out of range");
  return {adjacency_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
}

double Network::mean_degree() const {
  return n_ == 0 ? 0.0 : 2.0 * static_cast<double>(edges_.size()) / static_cast<double>(n_);
}

Network Network::permuted(std::span<const std::size_t> perm) const {
  require_shape(perm.size() == n_, "Network::permuted: permutation length mismatch");
  std::vector<Edge> e;
  e.reserve(edges_.size());
  for (auto [i, j] : edges_) e.emplace_back(perm[i], perm[j]);
  return Network(n_, e);
}

SparseMatrix adjacency_matrix(const Network& net) {
  std::vector<Triplet> t;
  t.reserve(2 * net.edge_count());
  for (auto [i, j] : net.edges()) {
    t.push_back({i, j, 1.0});
    t.push_back({j, i, 1.0});
  }
  return SparseMatrix::from_triplets(net.node_count(), net.node_count(), std::move(t));
}

SparseMatrix normalize_adjacency(const Network& net) {
  const std::size_t n = net.node_count();
  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i)
    inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(net.degree(i) + 1));
  std::vector<Triplet> t;
  t.reserve(n + 2 * net.edge_count());
  for (std::size_t i = 0; i < n; ++i) {
    t.push_back({i, i, inv_sqrt_deg[i] * inv_sqrt_deg[i]});
    for (std::size_t j : net.neighbors(i)) t.push_back({i, j, inv_sqrt_deg[i] * inv_sqrt_deg[j]});
  }
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

DenseMatrix neighbor_sum(const Network& net, const DenseMatrix& r) {
  require_shape(r.rows() == net.node_count(), "neighbor_sum: expected " + std::to_string(net.node_count()) +
                                                  " rows, got " + std::to_string(r.rows()));
  DenseMatrix out(r.rows(), r.cols());
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    auto o = out.row(i);
    for (std::size_t j : net.neighbors(i)) {
      auto src = r.row(j);
      for (std::size_t c = 0; c < o.size(); ++c) o[c] += src[c];
    }
  }
  return out;
}

}  // namespace netdeconf
