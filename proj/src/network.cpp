#include "fcnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fcnet/error.hpp"

namespace fcnet {

BinaryNetwork::BinaryNetwork(int n, std::vector<Edge> edges)
    : n_(n), edges_(std::move(edges)), degrees_(static_cast<std::size_t>(n), 0),
      adjacency_(static_cast<std::size_t>(n)) {
  if (n < 0) throw ShapeError("negative node count");
  for (auto& e : edges_) {
    if (e.i > e.j) std::swap(e.i, e.j);
    if (e.i < 0 || e.j >= n) throw ShapeError("edge endpoint out of range");
    if (e.i == e.j) throw ShapeError("self-loop at node " + std::to_string(e.i));
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
    throw ShapeError("duplicate edge");
  for (const auto& e : edges_) {
    ++degrees_[e.i];
    ++degrees_[e.j];
    adjacency_[e.i].push_back(e.j);
    adjacency_[e.j].push_back(e.i);
  }
  for (auto& list : adjacency_) std::sort(list.begin(), list.end());
}

bool BinaryNetwork::has_edge(int a, int b) const {
  const auto& list = adjacency_[a];
  return std::binary_search(list.begin(), list.end(), b);
}

double BinaryNetwork::density() const {
  if (n_ < 2) return 0.0;
  return 2.0 * static_cast<double>(edges_.size()) / (static_cast<double>(n_) * (n_ - 1));
}

WeightedNetwork::WeightedNetwork(int n, std::vector<WeightedEdge> edges)
    : n_(n), edges_(std::move(edges)), adjacency_(static_cast<std::size_t>(n)) {
  for (auto& e : edges_) {
    if (e.i > e.j) std::swap(e.i, e.j);
    if (e.i < 0 || e.j >= n) throw ShapeError("edge endpoint out of range");
    if (e.i == e.j) throw ShapeError("self-loop at node " + std::to_string(e.i));
    if (!(e.weight > 0.0) || !std::isfinite(e.weight))
      throw DomainError("edge weights must be positive and finite");
  }
  std::sort(edges_.begin(), edges_.end(), [](const auto& a, const auto& b) {
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });
  for (std::size_t k = 1; k < edges_.size(); ++k)
    if (edges_[k].i == edges_[k - 1].i && edges_[k].j == edges_[k - 1].j)
      throw ShapeError("duplicate edge");
  for (const auto& e : edges_) {
    adjacency_[e.i].push_back({e.j, e.weight});
    adjacency_[e.j].push_back({e.i, e.weight});
  }
  for (auto& list : adjacency_)
    std::sort(list.begin(), list.end(), [](auto a, auto b) { return a.node < b.node; });
}

BinaryNetwork WeightedNetwork::skeleton() const {
  std::vector<Edge> plain;
  plain.reserve(edges_.size());
  for (const auto& e : edges_) plain.push_back({e.i, e.j});
  BinaryNetwork g(n_, std::move(plain));
  g.provenance = provenance;
  return g;
}

WeightedNetwork with_unit_weights(const BinaryNetwork& g) {
  std::vector<WeightedEdge> edges;
  edges.reserve(g.edge_count());
  for (const auto& e : g.edges()) edges.push_back({e.i, e.j, 1.0});
  return WeightedNetwork(g.size(), std::move(edges));
}

std::vector<int> connected_components(const BinaryNetwork& g) {
  std::vector<int> label(static_cast<std::size_t>(g.size()), -1);
  std::vector<int> stack;
  int next = 0;
  for (int start = 0; start < g.size(); ++start) {
    if (label[start] >= 0) continue;
    label[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w : g.neighbors(v))
        if (label[w] < 0) {
          label[w] = next;
          stack.push_back(w);
        }
    }
    ++next;
  }
  return label;
}

BinaryNetwork induced_subgraph(const BinaryNetwork& g, const std::vector<int>& nodes) {
  std::vector<int> index(static_cast<std::size_t>(g.size()), -1);
  for (std::size_t k = 0; k < nodes.size(); ++k) index[nodes[k]] = static_cast<int>(k);
  std::vector<Edge> edges;
  for (const auto& e : g.edges())
    if (index[e.i] >= 0 && index[e.j] >= 0) edges.push_back({index[e.i], index[e.j]});
  return BinaryNetwork(static_cast<int>(nodes.size()), std::move(edges));
}

std::vector<int> largest_component(const BinaryNetwork& g) {
  const auto label = connected_components(g);
  if (label.empty()) return {};
  const int count = *std::max_element(label.begin(), label.end()) + 1;
  std::vector<int> sizes(static_cast<std::size_t>(count), 0);
  for (int l : label) ++sizes[l];
  const int best = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  std::vector<int> nodes;
  for (int v = 0; v < g.size(); ++v)
    if (label[v] == best) nodes.push_back(v);
  return nodes;
}

}  // namespace fcnet
