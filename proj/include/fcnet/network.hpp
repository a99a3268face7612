#pragma once

#include <compare>
#include <map>
#include <string>
#include <vector>

namespace fcnet {

/// Undirected node pair, always stored with i < j.
struct Edge {
  int i = 0;
  int j = 0;
  auto operator<=>(const Edge&) const = default;
};

struct WeightedEdge {
  int i = 0;
  int j = 0;
  double weight = 1.0;
};

/// How a network was derived, carried into file headers and reports.
struct Provenance {
  std::string strategy;
  std::map<std::string, double> params;
};

/// Simple undirected graph: no self-loops, no duplicate edges.
class BinaryNetwork {
 public:
  BinaryNetwork() = default;
  /// Normalizes each pair to i < j and sorts; throws on self-loops,
  /// duplicates, or out-of-range nodes.
  BinaryNetwork(int n, std::vector<Edge> edges);

  int size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<int>& degrees() const { return degrees_; }
  /// Sorted neighbour list of `node`.
  const std::vector<int>& neighbors(int node) const { return adjacency_[node]; }
  bool has_edge(int a, int b) const;
  double density() const;

  Provenance provenance;

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<int> degrees_;
  std::vector<std::vector<int>> adjacency_;
};

/// Undirected graph with strictly positive, finite weights.
class WeightedNetwork {
 public:
  struct Arc {
    int node;
    double weight;
  };

  WeightedNetwork() = default;
  WeightedNetwork(int n, std::vector<WeightedEdge> edges);

  int size() const { return n_; }
  const std::vector<WeightedEdge>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Arc>& neighbors(int node) const { return adjacency_[node]; }
  /// The unweighted graph on the same edge set.
  BinaryNetwork skeleton() const;

  Provenance provenance;

 private:
  int n_ = 0;
  std::vector<WeightedEdge> edges_;
  std::vector<std::vector<Arc>> adjacency_;
};

/// Every edge weighted 1.
WeightedNetwork with_unit_weights(const BinaryNetwork& g);

/// Component label per node, labels numbered by smallest member.
std::vector<int> connected_components(const BinaryNetwork& g);

/// Induced subgraph on `nodes` (relabelled 0..k-1 in the given order).
BinaryNetwork induced_subgraph(const BinaryNetwork& g, const std::vector<int>& nodes);

/// Node list of the largest component; ties go to the one holding the smallest node.
std::vector<int> largest_component(const BinaryNetwork& g);

}  // namespace fcnet
