#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fcnet/estimate.hpp"
#include "fcnet/network.hpp"
#include "fcnet/random.hpp"
#include "fcnet/threshold.hpp"

namespace fcnet {

/// ceil(sqrt(T)).
int default_block_length(Eigen::Index series_length);

/// One circular block-bootstrap replicate of a node x time block. Block
/// starts are shared by all nodes, so simultaneous samples stay together.
Eigen::MatrixXd bootstrap_replicate(const Eigen::MatrixXd& series, int block_length, Rng& rng);

/// B replicates; replicate r draws from make_rng(seed, r). Throws
/// ValidationError unless 2 <= block_length <= T.
std::vector<Eigen::MatrixXd> block_bootstrap(const Eigen::MatrixXd& series, int block_length,
                                             int replicates, std::uint64_t seed);

/// Estimator followed by binarization. Significance thresholds take the
/// series length from the data.
struct NetworkPipeline {
  EstimatorSpec estimator;
  ThresholdSpec threshold;
};

BinaryNetwork build_network(const Eigen::MatrixXd& series, const NetworkPipeline& pipeline);

/// Names accepted by network_metric.
const std::vector<std::string>& scalar_metric_names();

/// A scalar summary of a network by name: density, mean_degree, edge_count,
/// global_efficiency, local_efficiency, clustering, transitivity,
/// path_length, assortativity, modularity, community_count. The community
/// metrics run Louvain with `seed`.
double network_metric(const BinaryNetwork& g, const std::string& metric, std::uint64_t seed = 0);

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Bootstrap distribution of a metric around its point value. Failed
/// replicates are dropped from `replicates` and counted in `failures`.
struct DeltaDistribution {
  std::string metric;
  double point = 0.0;
  std::vector<double> replicates;
  /// mean(replicates) - point.
  double bias = 0.0;
  double level = 0.95;
  /// Quantiles (1 -/+ level) / 2 of the replicates.
  ConfidenceInterval percentile;
  /// (point - bias) -/+ z sd(replicates).
  ConfidenceInterval normal;
  int replicate_count = 0;
  int failures = 0;
  int block_length = 0;
  std::uint64_t seed = 0;
};

/// Fills bias and intervals from point and replicates.
void summarize_delta(DeltaDistribution& d);

struct MetricErrorOptions {
  /// 0 selects default_block_length(T).
  int block_length = 0;
  double level = 0.95;
  /// false re-runs the pipeline on the original series every time, the
  /// zero-width reference case.
  bool resample = true;
};

/// Re-estimates the network and the metric on B bootstrap replicates.
/// A replicate whose pipeline throws is skipped; more than 10% skipped
/// throws InfeasibleError.
DeltaDistribution metric_error(const Eigen::MatrixXd& series, const NetworkPipeline& pipeline,
                               const std::string& metric, int replicates, std::uint64_t seed,
                               const MetricErrorOptions& options = {});

}  // namespace fcnet
