#pragma once

// Data generator for the two-part model, written from the model definition
// (dense covariance, direct sampling) rather than the fitting code.

#include <cmath>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "fcnet/mixedmodel.hpp"
#include "fcnet/random.hpp"

namespace fcnet::testing {

struct TwoPartTruth {
  int nodes = 8;
  int subjects = 30;
  int tasks = 1;
  /// Terms: intercept, group (subject 0/1, half each), length (dyad).
  Eigen::Vector3d beta_v{-0.2, 0.8, -0.3};
  Eigen::Vector3d beta_s{0.3, 0.2, -0.1};
  double tau_v = 0.5;
  double tau_s = 0.1;
  double sigma2 = 0.04;
  CorrelationStructure omega{CorrelationKind::Lear, 0.6, 0.8};
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Ones(1, 1);
};

inline double dense_inv_logit(double x) { return 1 / (1 + std::exp(-x)); }

/// Node coordinates in a 3 x 3 x 3 box; the dyad covariate "length" is the
/// node distance rescaled to mean about 1.
inline DyadDataset simulate_twopart(const TwoPartTruth& truth, std::uint64_t seed) {
  Rng rng(seed);
  const int n = truth.nodes, m = n * (n - 1) / 2, t = truth.tasks;
  Eigen::Matrix3Xd xyz(3, n);
  for (int v = 0; v < n; ++v)
    for (int c = 0; c < 3; ++c) xyz(c, v) = 3 * uniform01(rng);

  // Dyad correlation from pairwise midpoint distances.
  std::vector<Eigen::Vector3d> mid;
  std::vector<double> length;
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      mid.push_back(0.5 * (xyz.col(j) + xyz.col(k)));
      length.push_back((xyz.col(j) - xyz.col(k)).norm() / 1.5);
    }
  Eigen::MatrixXd dist(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) dist(a, b) = (mid[a] - mid[b]).norm();
  const Eigen::MatrixXd omega = corr_structure_eval(truth.omega, dist);
  Eigen::MatrixXd full(t * m, t * m);
  for (int ta = 0; ta < t; ++ta)
    for (int tb = 0; tb < t; ++tb)
      full.block(ta * m, tb * m, m, m) = truth.sigma2 * truth.gamma(ta, tb) * omega;
  const Eigen::MatrixXd chol = full.llt().matrixL();

  DyadDataset d;
  d.node_count = n;
  d.subject_count = truth.subjects;
  d.task_count = t;
  d.coordinates = xyz;
  d.covariate_names = {"group", "length"};
  const Eigen::Index rows = static_cast<Eigen::Index>(truth.subjects) * t * m;
  d.strength.resize(rows);
  d.covariates.resize(rows, 2);
  Eigen::Index r = 0;
  for (int s = 0; s < truth.subjects; ++s) {
    const double group = s % 2;
    const double bv = truth.tau_v * standard_normal(rng);
    const double bs = truth.tau_s * standard_normal(rng);
    Eigen::VectorXd z(t * m);
    for (auto& x : z) x = standard_normal(rng);
    const Eigen::VectorXd e = chol * z;
    for (int ta = 0; ta < t; ++ta) {
      int dyad = 0;
      for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k, ++dyad, ++r) {
          const Eigen::Vector3d x(1.0, group, length[dyad]);
          const bool present = uniform01(rng) < dense_inv_logit(x.dot(truth.beta_v) + bv);
          d.subject.push_back(s);
          d.task.push_back(ta);
          d.node_j.push_back(j);
          d.node_k.push_back(k);
          d.presence.push_back(present ? 1 : 0);
          d.strength[r] = present ? std::tanh(x.dot(truth.beta_s) + bs + e[ta * m + dyad])
                                  : std::numeric_limits<double>::quiet_NaN();
          d.covariates(r, 0) = group;
          d.covariates(r, 1) = length[dyad];
        }
    }
  }
  return d;
}

}  // namespace fcnet::testing
