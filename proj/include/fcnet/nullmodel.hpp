#pragma once

#include <cstdint>
#include <vector>

#include "fcnet/graph.hpp"
#include "fcnet/network.hpp"

namespace fcnet {

/// Degree-preserving double-edge swaps until swaps_per_edge * |E| have
/// succeeded. Gives up with a warning after 100 * |E| consecutive rejected
/// proposals and returns the graph reached so far.
BinaryNetwork rewire_preserving_degree(const BinaryNetwork& g, int swaps_per_edge,
                                       std::uint64_t seed);

/// Ring lattice on the same node count with exactly |E| edges, filled by ring
/// distance then by node, so degrees differ by at most 2. Warns when |E| < n.
BinaryNetwork lattice_reference(const BinaryNetwork& g);

struct SmallWorldOptions {
  int null_count = 20;
  int swaps_per_edge = 10;
  std::uint64_t seed = 0;
  ClusteringVariant clustering = ClusteringVariant::MeanLocal;
};

struct SmallWorldResult {
  double sigma = 0.0;
  double omega = 0.0;
  double clustering = 0.0;
  double path_length = 0.0;
  double clustering_random = 0.0;
  double path_length_random = 0.0;
  double clustering_lattice = 0.0;
  int null_count = 0;
  std::uint64_t seed = 0;
  /// True when the input was disconnected and only its largest component used.
  bool largest_component_only = false;
  int nodes_used = 0;
};

/// Both indices from one null ensemble. A zero random-null clustering leaves
/// sigma NaN and a zero lattice clustering leaves omega NaN.
SmallWorldResult small_world(const BinaryNetwork& g, const SmallWorldOptions& options = {});

/// (C / C_rand) / (L / L_rand); throws UndefinedMetric when C_rand = 0.
SmallWorldResult small_world_sigma(const BinaryNetwork& g, const SmallWorldOptions& options = {});

/// L_rand / L - C / C_latt; throws UndefinedMetric when C_latt = 0.
SmallWorldResult small_world_omega(const BinaryNetwork& g, const SmallWorldOptions& options = {});

struct PowerLawOptions {
  int bootstrap_reps = 100;
  std::uint64_t seed = 0;
  /// Smallest number of observations at or above a candidate cutoff.
  int min_tail = 50;
};

struct PowerLawFit {
  double alpha = 0.0;
  int x_min = 0;
  int tail_count = 0;
  double ks_statistic = 0.0;
  double gof_p = 0.0;
  int bootstrap_reps = 0;
  double pure_loglik = 0.0;
  /// Exponentially truncated fit x^-a e^(-lambda x) on the same tail.
  double truncated_alpha = 0.0;
  double truncated_lambda = 0.0;
  double truncated_loglik = 0.0;
};

/// Discrete power law by maximum likelihood with the cutoff chosen to
/// minimize the KS distance; goodness of fit by semi-parametric bootstrap.
PowerLawFit powerlaw_fit(const std::vector<int>& values, const PowerLawOptions& options = {});

/// Draws from the discrete power law with exponent alpha on x >= x_min.
std::vector<int> sample_discrete_powerlaw(double alpha, int x_min, std::size_t count,
                                          std::uint64_t seed);

}  // namespace fcnet
