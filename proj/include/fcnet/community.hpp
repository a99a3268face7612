#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fcnet/network.hpp"

namespace fcnet {

/// Non-overlapping community assignment. Ids are contiguous from 0 and
/// numbered by first appearance in node order.
struct Partition {
  std::vector<int> assignment;
  int community_count = 0;
  double modularity = 0.0;
};

/// Relabels arbitrary non-negative ids to contiguous first-appearance order.
std::vector<int> canonical_labels(const std::vector<int>& assignment);

/// Sum over communities of (within-fraction - (end-fraction)^2). Throws
/// ValidationError for a wrong-length assignment or a negative id, and
/// UndefinedMetric on an edgeless graph.
double modularity(const BinaryNetwork& g, const std::vector<int>& assignment);
/// Weighted form: edge fractions become weight fractions.
double modularity(const WeightedNetwork& g, const std::vector<int>& assignment);

/// Louvain: seeded sweep order, strictly improving local moves, then
/// aggregation, until a level makes no move.
Partition louvain(const BinaryNetwork& g, std::uint64_t seed);
Partition louvain(const WeightedNetwork& g, std::uint64_t seed);

/// 2 I(a; b) / (H(a) + H(b)); 1 when both partitions are trivial.
double normalized_mutual_information(const std::vector<int>& a, const std::vector<int>& b);

struct LouvainRuns {
  std::vector<Partition> runs;
  /// Pairwise NMI between runs.
  Eigen::MatrixXd agreement;
  /// Run with the highest modularity (first on ties).
  std::size_t best = 0;
};

/// Independent runs with seeds derived from `seed`, executed in parallel.
LouvainRuns louvain_runs(const BinaryNetwork& g, int runs, std::uint64_t seed);
LouvainRuns louvain_runs(const WeightedNetwork& g, int runs, std::uint64_t seed);

struct GirvanNewmanResult {
  Partition best;
  /// Edges in removal order (the full dendrogram).
  std::vector<Edge> removed;
};

inline constexpr int kGirvanNewmanMaxNodes = 500;

/// Repeatedly removes the highest edge-betweenness edge (ties: smallest pair)
/// and returns the highest-modularity component partition seen with at most
/// `max_communities` communities (0 = no limit).
GirvanNewmanResult girvan_newman(const BinaryNetwork& g, int max_communities = 0);

enum class Role { R1, R2, R3, R4, R5, R6, R7 };
std::string to_string(Role role);

/// Role cuts on within-module z and participation.
struct RoleThresholds {
  double hub_z = 2.5;
  double ultra_peripheral = 0.05;
  double peripheral = 0.62;
  double connector = 0.80;
  double provincial_hub = 0.30;
  double connector_hub = 0.75;
};

struct NodeRole {
  int node = 0;
  double within_module_z = 0.0;
  double participation = 0.0;
  Role role = Role::R1;
  /// The node's community has one member, so z is fixed at 0.
  bool singleton_community = false;
};

Role classify_role(double z, double participation, const RoleThresholds& cuts = {});

std::vector<NodeRole> cartography(const BinaryNetwork& g, const std::vector<int>& assignment,
                                  const RoleThresholds& cuts = {});

}  // namespace fcnet
