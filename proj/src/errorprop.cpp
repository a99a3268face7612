#include "fcnet/errorprop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fcnet/community.hpp"
#include "fcnet/diagnostics.hpp"
#include "fcnet/error.hpp"
#include "fcnet/graph.hpp"
#include "fcnet/parallel.hpp"
#include "fcnet/random.hpp"
#include "fcnet/stats.hpp"

namespace fcnet {

int default_block_length(Eigen::Index series_length) {
  return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(series_length))));
}

namespace {

void check_block_length(Eigen::Index length, int block_length) {
  if (block_length < 2) throw ValidationError("block length must be at least 2");
  if (block_length > length)
    throw ValidationError("block length " + std::to_string(block_length) +
                          " exceeds the series length " + std::to_string(length));
}

}  // namespace

Eigen::MatrixXd bootstrap_replicate(const Eigen::MatrixXd& series, int block_length, Rng& rng) {
  const Eigen::Index length = series.cols();
  check_block_length(length, block_length);
  Eigen::MatrixXd out(series.rows(), length);
  for (Eigen::Index filled = 0; filled < length;) {
    const auto start = static_cast<Eigen::Index>(uniform_index(rng, length));
    for (int b = 0; b < block_length && filled < length; ++b, ++filled)
      out.col(filled) = series.col((start + b) % length);
  }
  return out;
}

std::vector<Eigen::MatrixXd> block_bootstrap(const Eigen::MatrixXd& series, int block_length,
                                             int replicates, std::uint64_t seed) {
  check_block_length(series.cols(), block_length);
  if (replicates < 1) throw ValidationError("at least one bootstrap replicate is required");
  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(replicates));
  parallel_for(out.size(), [&](std::size_t r) {
    Rng rng = make_rng(seed, r);
    out[r] = bootstrap_replicate(series, block_length, rng);
  });
  return out;
}

BinaryNetwork build_network(const Eigen::MatrixXd& series, const NetworkPipeline& pipeline) {
  return apply_threshold(estimate_connectivity(series, pipeline.estimator), pipeline.threshold,
                         series.cols());
}

const std::vector<std::string>& scalar_metric_names() {
  static const std::vector<std::string> names{
      "density",       "mean_degree",  "edge_count",    "global_efficiency",
      "local_efficiency", "clustering", "transitivity", "path_length",
      "assortativity", "modularity",   "community_count"};
  return names;
}

double network_metric(const BinaryNetwork& g, const std::string& metric, std::uint64_t seed) {
  if (metric == "density") return g.density();
  if (metric == "mean_degree")
    return g.size() == 0 ? 0.0 : 2.0 * static_cast<double>(g.edge_count()) / g.size();
  if (metric == "edge_count") return static_cast<double>(g.edge_count());
  if (metric == "global_efficiency") return global_efficiency(g).value;
  if (metric == "local_efficiency") return local_efficiency(g).value;
  if (metric == "clustering") return clustering(g, ClusteringVariant::MeanLocal).value;
  if (metric == "transitivity") return clustering(g, ClusteringVariant::Transitivity).value;
  if (metric == "path_length") return path_length(g).value;
  if (metric == "assortativity") return assortativity(g).value;
  if (metric == "modularity") {
    if (g.edge_count() == 0) throw UndefinedMetric("modularity of an edgeless graph");
    return louvain(g, seed).modularity;
  }
  if (metric == "community_count") return louvain(g, seed).community_count;
  throw ValidationError("unknown metric '" + metric + "'");
}

void summarize_delta(DeltaDistribution& d) {
  if (!(d.level > 0.0 && d.level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");
  if (d.replicates.empty()) throw ValidationError("no bootstrap replicates to summarize");
  // Moments of the deviations from the point value, so that replicates
  // equal to it give exactly zero bias and spread.
  std::vector<double> deviation(d.replicates.size());
  for (std::size_t r = 0; r < deviation.size(); ++r) deviation[r] = d.replicates[r] - d.point;
  d.bias = mean(deviation);
  const double tail = (1.0 - d.level) / 2.0;
  d.percentile = {quantile(d.replicates, tail), quantile(d.replicates, 1.0 - tail)};
  const double sd = deviation.size() > 1 ? sample_sd(deviation) : 0.0;
  const double z = normal_quantile(1.0 - tail);
  const double center = d.point - d.bias;
  d.normal = {center - z * sd, center + z * sd};
}

DeltaDistribution metric_error(const Eigen::MatrixXd& series, const NetworkPipeline& pipeline,
                               const std::string& metric, int replicates, std::uint64_t seed,
                               const MetricErrorOptions& options) {
  if (std::find(scalar_metric_names().begin(), scalar_metric_names().end(), metric) ==
      scalar_metric_names().end())
    throw ValidationError("unknown metric '" + metric + "'");
  if (replicates < 1) throw ValidationError("at least one bootstrap replicate is required");
  const int block_length =
      options.block_length > 0 ? options.block_length : default_block_length(series.cols());
  check_block_length(series.cols(), block_length);

  // Community metrics share one Louvain seed so only the data varies.
  const std::uint64_t metric_seed = derive_seed(seed, "metric");
  DeltaDistribution d;
  d.metric = metric;
  d.level = options.level;
  d.replicate_count = replicates;
  d.block_length = block_length;
  d.seed = seed;
  d.point = network_metric(build_network(series, pipeline), metric, metric_seed);

  constexpr double kFailed = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> values(static_cast<std::size_t>(replicates), kFailed);
  parallel_for(values.size(), [&](std::size_t r) {
    try {
      Rng rng = make_rng(seed, r);
      const BinaryNetwork g = options.resample
                                  ? build_network(bootstrap_replicate(series, block_length, rng),
                                                  pipeline)
                                  : build_network(series, pipeline);
      values[r] = network_metric(g, metric, metric_seed);
    } catch (const Error&) {
      values[r] = kFailed;
    }
  });
  for (double v : values) {
    if (std::isnan(v))
      ++d.failures;
    else
      d.replicates.push_back(v);
  }
  if (d.failures * 10 > replicates)
    throw InfeasibleError(std::to_string(d.failures) + " of " + std::to_string(replicates) +
                          " bootstrap replicates failed for metric '" + metric + "'");
  if (d.failures > 0)
    warn("skipped " + std::to_string(d.failures) + " failed bootstrap replicates");
  summarize_delta(d);
  return d;
}

}  // namespace fcnet
