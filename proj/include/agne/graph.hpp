#pragma once

#include "agne/types.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace agne {

/// Oriented edge tail -> head between 0-based node indices.
struct Edge {
  int tail = 0;
  int head = 0;
};

/// Connected, undirected communication graph whose edges carry a fixed
/// orientation and a stable index. Edge order defines the column order of
/// the incidence matrix; orientation defines its signs.
///
/// Immutable after construction.
class CommGraph {
 public:
  /// Keeps edges exactly as given (order and orientation). Throws agne::Error
  /// on self-loops, duplicate node pairs, out-of-range nodes or a
  /// disconnected graph.
  CommGraph(int node_count, std::vector<Edge> edges);

  /// Canonical construction from unordered pairs: tail = lower index,
  /// head = higher index, edges sorted lexicographically by (tail, head).
  static CommGraph from_undirected(int node_count,
                                   const std::vector<std::pair<int, int>>& pairs);

  static CommGraph ring(int node_count);
  static CommGraph path(int node_count);
  /// Star centered on node 0.
  static CommGraph star(int node_count);
  /// Erdos-Renyi G(N, p) conditioned on connectivity: a random spanning
  /// tree is laid down first, then every remaining pair is added with
  /// probability p.
  static CommGraph random_connected(int node_count, double p, std::uint64_t seed);

  int node_count() const { return node_count_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int l) const { return edges_[static_cast<std::size_t>(l)]; }

  /// +1 if node i is the head of edge l, -1 if the tail, 0 otherwise.
  int incidence(int i, int l) const;

  /// Node neighbors of i, ascending.
  const std::vector<int>& neighbors(int i) const { return neighbors_[idx(i)]; }
  /// Edges whose head is i.
  const std::vector<int>& in_edges(int i) const { return in_edges_[idx(i)]; }
  /// Edges whose tail is i; these edge variables are maintained by i.
  const std::vector<int>& out_edges(int i) const { return out_edges_[idx(i)]; }
  /// in_edges(i) and out_edges(i) merged, ascending.
  const std::vector<int>& incident_edges(int i) const { return incident_[idx(i)]; }
  /// Edges sharing a node with edge l (including l itself), ascending.
  const std::vector<int>& edge_neighbors(int l) const { return edge_neighbors_[idx(l)]; }

  int degree(int i) const { return static_cast<int>(neighbors(i).size()); }
  int max_degree() const;

 private:
  static std::size_t idx(int i) { return static_cast<std::size_t>(i); }

  int node_count_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::vector<int>> in_edges_;
  std::vector<std::vector<int>> out_edges_;
  std::vector<std::vector<int>> incident_;
  std::vector<std::vector<int>> edge_neighbors_;
};

/// N x M incidence matrix V.
Mat incidence_matrix(const CommGraph& g);
/// N x N Laplacian L = V V^T.
Mat node_laplacian(const CommGraph& g);
/// M x M edge Laplacian L^e = V^T V.
Mat edge_laplacian(const CommGraph& g);

/// Signed entry of the edge Laplacian, computed from the graph structure
/// without forming V.
int edge_laplacian_entry(const CommGraph& g, int l, int q);

}  // namespace agne
