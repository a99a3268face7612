#pragma once

#include <variant>

#include "fcnet/estimate.hpp"
#include "fcnet/network.hpp"
#include "fcnet/stats.hpp"

namespace fcnet {

/// What happens to negative associations before thresholding.
enum class NegativePolicy { Drop, Absolute };

NegativePolicy parse_negative_policy(const std::string& text);

struct ValueThreshold {
  double tau;
};

/// Keep pairs whose correlation t-test survives the correction at `alpha`.
struct SignificanceThreshold {
  double alpha = 0.05;
  Correction correction = Correction::Bonferroni;
  Eigen::Index series_length = 0;
};

/// Sparsest threshold that still connects every node.
struct MinConnected {};

using FixedCriterion = std::variant<ValueThreshold, SignificanceThreshold, MinConnected>;

BinaryNetwork apply_fixed_threshold(const ConnectionMatrix& cm, const FixedCriterion& criterion,
                                    NegativePolicy policy = NegativePolicy::Drop);

/// Number of edges for a mean degree: round(n * k / 2).
std::size_t edges_for_mean_degree(int n, double k_target);

/// The round(n k / 2) strongest pairs; ties broken lexicographically.
BinaryNetwork apply_fixed_degree(const ConnectionMatrix& cm, double k_target,
                                 NegativePolicy policy = NegativePolicy::Drop);

struct DensityTarget {
  double density;
};

/// Mean degree k = n^(1/S), so that log(n) / log(k) = S.
struct PathExponentTarget {
  double exponent;
};

BinaryNetwork apply_fixed_density(const ConnectionMatrix& cm,
                                  const std::variant<DensityTarget, PathExponentTarget>& target,
                                  NegativePolicy policy = NegativePolicy::Drop);

enum class WeightPolicy { KeepPositive, Absolute, ThresholdThenKeep };

WeightedNetwork weighted_network(const ConnectionMatrix& cm, WeightPolicy policy,
                                 double tau = 0.0);

enum class ThresholdStrategy { Value, Significance, MinConnected, FixedDegree, FixedDensity, PathExponent };

/// Names: value, significance, min_connected, fixed_degree, fixed_density, path_exponent.
std::string to_string(ThresholdStrategy s);
ThresholdStrategy parse_threshold_strategy(const std::string& text);

/// Any binarization strategy with its parameters; only the fields of the
/// chosen strategy are read.
struct ThresholdSpec {
  ThresholdStrategy strategy = ThresholdStrategy::Significance;
  double tau = 0.0;
  double alpha = 0.05;
  Correction correction = Correction::Bonferroni;
  double k = 4.0;
  double density = 0.1;
  double exponent = 2.5;
  NegativePolicy negative = NegativePolicy::Drop;
};

/// `series_length` feeds the significance test and is ignored otherwise.
BinaryNetwork apply_threshold(const ConnectionMatrix& cm, const ThresholdSpec& spec,
                              Eigen::Index series_length = 0);

}  // namespace fcnet
