#pragma once

#include <Eigen/Core>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace fcnet {

enum class Correction { None, Bonferroni, BhFdr };

enum class Tail { TwoSided, Greater, Less };

/// Names: none, bonferroni, bh-fdr (also fdr); two-sided, greater, less.
std::string to_string(Correction c);
Correction parse_correction(const std::string& text);
std::string to_string(Tail t);
Tail parse_tail(const std::string& text);

template <typename Scalar>
Scalar logit(Scalar p) {
  return std::log(p / (Scalar(1) - p));
}

template <typename Scalar>
Scalar inv_logit(Scalar x) {
  return x >= Scalar(0) ? Scalar(1) / (Scalar(1) + std::exp(-x))
                        : std::exp(x) / (Scalar(1) + std::exp(x));
}

/// P(T > t) for Student's t with `df` degrees of freedom.
double student_t_sf(double t, double df);

/// p-value of a t statistic under the requested alternative.
double student_t_pvalue(double t, double df, Tail tail);

double normal_cdf(double x);
double normal_quantile(double p);

/// Adjusted p-values (q). NaN inputs stay NaN and are excluded from the
/// family size.
Eigen::VectorXd adjust_pvalues(const Eigen::VectorXd& p, Correction correction);

/// Linear-interpolation sample quantile (R type 7).
double quantile(std::vector<double> values, double prob);

double mean(std::span<const double> values);

/// Sample standard deviation (n - 1 denominator).
double sample_sd(std::span<const double> values);

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
struct KsTwoSample {
  double statistic;
  double p_value;
};
KsTwoSample ks_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace fcnet
