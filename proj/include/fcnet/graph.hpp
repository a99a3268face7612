#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fcnet/network.hpp"

namespace fcnet {

struct MetricReport {
  std::string metric;
  double value = 0.0;
  std::optional<Eigen::VectorXd> per_node;
  std::size_t unreachable_pairs = 0;
};

enum class ClusteringVariant { MeanLocal, Transitivity, WeightedGeometric };
ClusteringVariant parse_clustering_variant(const std::string& text);
std::string to_string(ClusteringVariant v);

enum class CentralityKind { Degree, Betweenness, Closeness, Eigenvector };
CentralityKind parse_centrality_kind(const std::string& text);
std::string to_string(CentralityKind k);

/// Nodes of degree < 2 contribute 0 to the mean-local variant. On a binary
/// network the weighted-geometric variant treats every weight as 1.
MetricReport clustering(const BinaryNetwork& g, ClusteringVariant variant);
/// Weighted-geometric uses (w_ij w_ih w_jh)^(1/3) with weights scaled by the
/// maximum; the other variants use the skeleton.
MetricReport clustering(const WeightedNetwork& g, ClusteringVariant variant);

/// Weighted forms use edge length 1 / weight throughout.
MetricReport local_efficiency(const BinaryNetwork& g);
MetricReport local_efficiency(const WeightedNetwork& g);
MetricReport global_efficiency(const BinaryNetwork& g);
MetricReport global_efficiency(const WeightedNetwork& g);

/// Mean over reachable ordered pairs; throws UndefinedMetric if none.
MetricReport path_length(const BinaryNetwork& g);
MetricReport path_length(const WeightedNetwork& g);

/// Betweenness is raw (each unordered pair counted once). Closeness uses
/// (c - 1) / sum of distances inside the node's component of size c, and 0
/// for isolated nodes. Eigenvector lives on the largest component.
MetricReport centrality(const BinaryNetwork& g, CentralityKind kind);
/// Weighted degree is strength; eigenvector uses the weight matrix.
MetricReport centrality(const WeightedNetwork& g, CentralityKind kind);

/// Raw shortest-path edge betweenness, aligned with g.edges().
std::vector<double> edge_betweenness(const BinaryNetwork& g);

/// Degree correlation over the edge set; UndefinedMetric when degree-regular.
MetricReport assortativity(const BinaryNetwork& g);

std::vector<int> degree_sequence(const BinaryNetwork& g);

/// All-pairs hop distances; +inf marks unreachable pairs.
Eigen::MatrixXd distance_matrix(const BinaryNetwork& g);
Eigen::MatrixXd distance_matrix(const WeightedNetwork& g);

}  // namespace fcnet
