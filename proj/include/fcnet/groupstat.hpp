#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fcnet/estimate.hpp"
#include "fcnet/network.hpp"
#include "fcnet/stats.hpp"

namespace fcnet {

/// Upper-triangle pairs (i < j) in lexicographic order; column k of an edge
/// sample matrix belongs to pair k.
std::vector<Edge> edge_pairs(int n);

/// Subjects x edges. Correlation-family matrices are Fisher-Z transformed,
/// other measures are used as they are. All matrices must share one size.
Eigen::MatrixXd edge_samples(const std::vector<ConnectionMatrix>& group);

struct EdgeTestResult {
  int node_count = 0;
  std::vector<Edge> edges;
  Eigen::VectorXd t;
  Eigen::VectorXd p;
  Eigen::VectorXd q;
  int group_a = 0;
  int group_b = 0;
  Tail tail = Tail::TwoSided;
  Correction correction = Correction::None;
  /// Edges whose pooled within-group variance is zero; t and p are NaN.
  std::vector<bool> degenerate;
};

/// Pooled-variance two-sample t per edge (df = na + nb - 2), t > 0 when
/// group A is larger.
Eigen::VectorXd two_sample_t(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

EdgeTestResult edgewise_compare(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int node_count,
                                Correction correction, Tail tail = Tail::TwoSided);
EdgeTestResult edgewise_compare(const std::vector<ConnectionMatrix>& a,
                                const std::vector<ConnectionMatrix>& b, Correction correction,
                                Tail tail = Tail::TwoSided);

/// Spatial neighbour relation between nodes; a node is always its own neighbour.
class NodeAdjacency {
 public:
  NodeAdjacency() = default;
  NodeAdjacency(int n, const std::vector<Edge>& pairs);
  /// Nodes whose Euclidean distance is at most `radius`.
  static NodeAdjacency from_coordinates(const Eigen::Matrix3Xd& coordinates, double radius);

  int size() const { return n_; }
  bool near(int a, int b) const {
    return a == b || bits_[static_cast<std::size_t>(a) * n_ + b];
  }

 private:
  int n_ = 0;
  std::vector<char> bits_;
};

/// Two edges are pairwise neighbours when their endpoints can be matched so
/// that each matched pair is equal or spatially adjacent.
bool pairwise_neighbors(const Edge& x, const Edge& y, const NodeAdjacency& adjacency);

/// Connected components of an edge set, each with at least one edge.
std::vector<std::vector<Edge>> edge_components(int n, const std::vector<Edge>& edges);

/// Clusters of edges linked by pairwise neighbourship; clusters of a single
/// edge are not pairwise clusters and are dropped.
std::vector<std::vector<Edge>> pairwise_clusters(const std::vector<Edge>& edges,
                                                 const NodeAdjacency& adjacency);

struct ComponentOptions {
  double t_threshold = 3.0;
  int permutations = 1000;
  std::uint64_t seed = 0;
  Tail tail = Tail::TwoSided;
  /// Edges eligible for the supra-threshold set (all when empty).
  std::vector<bool> tested;
};

struct Cluster {
  std::vector<Edge> edges;
  /// Edge count.
  int size = 0;
  double p_fwe = 1.0;
};

struct ComponentResult {
  std::string method;
  std::vector<Cluster> clusters;  // largest first
  /// Largest cluster size under each label permutation.
  std::vector<int> null_max;
  int permutations = 0;
  double t_threshold = 0.0;
  Tail tail = Tail::TwoSided;
  Eigen::VectorXd t;
};

/// Network-based statistic: components of supra-threshold edges with FWE p
/// from the permutation distribution of the largest component size.
ComponentResult nbs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int node_count,
                    const ComponentOptions& options);
ComponentResult nbs(const std::vector<ConnectionMatrix>& a, const std::vector<ConnectionMatrix>& b,
                    const ComponentOptions& options);

/// Spatial pairwise clustering: as nbs, with clusters from pairwise_clusters.
ComponentResult spc(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int node_count,
                    const NodeAdjacency& adjacency, const ComponentOptions& options);
ComponentResult spc(const std::vector<ConnectionMatrix>& a, const std::vector<ConnectionMatrix>& b,
                    const NodeAdjacency& adjacency, const ComponentOptions& options);

}  // namespace fcnet
