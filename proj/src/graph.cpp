#include "agne/graph.hpp"

#include "agne/rng.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <set>
#include <string>

namespace agne {

CommGraph::CommGraph(int node_count, std::vector<Edge> edges)
    : node_count_(node_count), edges_(std::move(edges)) {
  if (node_count_ <= 0) throw Error("graph needs at least one node");
  const auto n = static_cast<std::size_t>(node_count_);
  neighbors_.assign(n, {});
  in_edges_.assign(n, {});
  out_edges_.assign(n, {});
  incident_.assign(n, {});

  std::set<std::pair<int, int>> seen;
  for (int l = 0; l < edge_count(); ++l) {
    const Edge& e = edges_[idx(l)];
    if (e.tail < 0 || e.tail >= node_count_ || e.head < 0 || e.head >= node_count_)
      throw Error("edge " + std::to_string(l) + " references a node out of range");
    if (e.tail == e.head)
      throw Error("self-loop at node " + std::to_string(e.tail));
    if (!seen.emplace(std::min(e.tail, e.head), std::max(e.tail, e.head)).second)
      throw Error("duplicate edge between nodes " + std::to_string(e.tail) + " and " +
                  std::to_string(e.head));
    out_edges_[idx(e.tail)].push_back(l);
    in_edges_[idx(e.head)].push_back(l);
    incident_[idx(e.tail)].push_back(l);
    incident_[idx(e.head)].push_back(l);
    neighbors_[idx(e.tail)].push_back(e.head);
    neighbors_[idx(e.head)].push_back(e.tail);
  }
  for (auto& v : neighbors_) std::sort(v.begin(), v.end());

  // Breadth-first connectivity check.
  std::vector<char> visited(n, 0);
  std::deque<int> queue{0};
  visited[0] = 1;
  int reached = 1;
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    for (int j : neighbors_[idx(i)]) {
      if (!visited[idx(j)]) {
        visited[idx(j)] = 1;
        ++reached;
        queue.push_back(j);
      }
    }
  }
  if (reached != node_count_) throw Error("communication graph is not connected");

  edge_neighbors_.assign(edges_.size(), {});
  for (int l = 0; l < edge_count(); ++l) {
    const Edge& e = edges_[idx(l)];
    auto& out = edge_neighbors_[idx(l)];
    const auto& a = incident_[idx(e.tail)];
    const auto& b = incident_[idx(e.head)];
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  }
}

CommGraph CommGraph::from_undirected(int node_count,
                                     const std::vector<std::pair<int, int>>& pairs) {
  std::vector<std::pair<int, int>> sorted;
  sorted.reserve(pairs.size());
  for (auto [a, b] : pairs) sorted.emplace_back(std::min(a, b), std::max(a, b));
  std::sort(sorted.begin(), sorted.end());
  std::vector<Edge> edges;
  edges.reserve(sorted.size());
  for (auto [t, h] : sorted) edges.push_back({t, h});
  return CommGraph(node_count, std::move(edges));
}

CommGraph CommGraph::ring(int node_count) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i + 1 < node_count; ++i) pairs.emplace_back(i, i + 1);
  if (node_count > 2) pairs.emplace_back(0, node_count - 1);
  return from_undirected(node_count, pairs);
}

CommGraph CommGraph::path(int node_count) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i + 1 < node_count; ++i) pairs.emplace_back(i, i + 1);
  return from_undirected(node_count, pairs);
}

CommGraph CommGraph::star(int node_count) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 1; i < node_count; ++i) pairs.emplace_back(0, i);
  return from_undirected(node_count, pairs);
}

CommGraph CommGraph::random_connected(int node_count, double p, std::uint64_t seed) {
  if (node_count <= 0) throw Error("graph needs at least one node");
  if (!(p >= 0.0 && p <= 1.0)) throw Error("edge probability must lie in [0, 1]");
  Rng rng(seed);
  std::set<std::pair<int, int>> pairs;
  // Random spanning tree: attach each node (in shuffled order) to an
  // already-placed one.
  std::vector<int> order(static_cast<std::size_t>(node_count));
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t k = order.size(); k > 1; --k) {
    const auto j = rng.uniform_int(k - 1);
    std::swap(order[k - 1], order[j]);
  }
  for (std::size_t k = 1; k < order.size(); ++k) {
    const int parent = order[rng.uniform_int(k - 1)];
    pairs.emplace(std::min(parent, order[k]), std::max(parent, order[k]));
  }
  for (int a = 0; a < node_count; ++a)
    for (int b = a + 1; b < node_count; ++b)
      if (rng.uniform() < p) pairs.emplace(a, b);
  return from_undirected(node_count, {pairs.begin(), pairs.end()});
}

int CommGraph::incidence(int i, int l) const {
  const Edge& e = edges_[idx(l)];
  if (e.head == i) return 1;
  if (e.tail == i) return -1;
  return 0;
}

int CommGraph::max_degree() const {
  int d = 0;
  for (int i = 0; i < node_count_; ++i) d = std::max(d, degree(i));
  return d;
}

Mat incidence_matrix(const CommGraph& g) {
  Mat v = Mat::Zero(g.node_count(), g.edge_count());
  for (int l = 0; l < g.edge_count(); ++l) {
    v(g.edge(l).head, l) = 1.0;
    v(g.edge(l).tail, l) = -1.0;
  }
  return v;
}

Mat node_laplacian(const CommGraph& g) {
  const Mat v = incidence_matrix(g);
  return v * v.transpose();
}

Mat edge_laplacian(const CommGraph& g) {
  const Mat v = incidence_matrix(g);
  return v.transpose() * v;
}

int edge_laplacian_entry(const CommGraph& g, int l, int q) {
  if (l == q) return 2;
  const Edge& a = g.edge(l);
  int sum = 0;
  for (int node : {a.tail, a.head}) sum += g.incidence(node, l) * g.incidence(node, q);
  return sum;
}

}  // namespace agne
