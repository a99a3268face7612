#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fcnet/estimate.hpp"

namespace fcnet {

/// One row per (subject, task, dyad j < k). Strength is NaN exactly when the
/// dyad is absent; present strengths lie in (-1, 1) and are Fisher-Z
/// transformed only when a model is fitted.
struct DyadDataset {
  int node_count = 0;
  int subject_count = 0;
  int task_count = 1;
  std::vector<int> subject;
  std::vector<int> task;
  std::vector<int> node_j;
  std::vector<int> node_k;
  std::vector<char> presence;
  Eigen::VectorXd strength;
  /// Covariate columns (the intercept is implicit and named "intercept").
  std::vector<std::string> covariate_names;
  Eigen::MatrixXd covariates;
  /// Node positions; dyad distance is the distance between dyad midpoints.
  std::optional<Eigen::Matrix3Xd> coordinates;
  /// Acquisition time per task, used by patterned task correlations.
  Eigen::VectorXd task_times;

  Eigen::Index rows() const { return static_cast<Eigen::Index>(subject.size()); }
  /// Index of dyad (j, k) among the n(n-1)/2 upper-triangle pairs.
  int dyad_index(Eigen::Index row) const;
  /// Throws on inconsistent lengths, ranges or the presence/strength link.
  void validate() const;
};

struct DatasetCovariates {
  /// One value per subject.
  std::vector<std::pair<std::string, Eigen::VectorXd>> subject;
  /// One symmetric n x n matrix shared by all subjects (e.g. a network measure).
  std::vector<std::pair<std::string, Eigen::MatrixXd>> dyad;
  /// Products of two named columns, named "a:b".
  std::vector<std::pair<std::string, std::string>> interactions;
  /// Fixed nodal-propensity columns "node_v" (v >= 1): 1 when v is an endpoint.
  bool nodal_effects = false;
};

/// scans[subject][task]. Negative values are zeroed; a dyad is present when
/// its value exceeds `threshold`.
DyadDataset build_dyad_dataset(const std::vector<std::vector<ConnectionMatrix>>& scans,
                               const DatasetCovariates& covariates = {}, double threshold = 0.0);
DyadDataset build_dyad_dataset(const std::vector<ConnectionMatrix>& scans,
                               const DatasetCovariates& covariates = {}, double threshold = 0.0);

enum class CorrelationKind {
  Identity,
  CompoundSymmetry,
  Lear,
  Ar1,
  DampedExponential,
  Exponential,
  Gaussian,
  Linear,
  Spherical,
};
std::string to_string(CorrelationKind kind);
CorrelationKind parse_correlation_kind(const std::string& text);

/// Stationary correlation as a function of distance. Parameters used per
/// kind: CS rho; LEAR rho, delta; AR1 rho; DE rho, nu; the others phi.
struct CorrelationStructure {
  CorrelationKind kind = CorrelationKind::Identity;
  double rho = 0.5;
  double delta = 1.0;
  double nu = 1.0;
  double phi = 1.0;
  /// LEAR distance range; taken from the positive distances when unset.
  std::optional<double> d_min;
  std::optional<double> d_max;

  int parameter_count() const;
  std::vector<std::string> parameter_names() const;
  std::vector<double> parameters() const;
  /// Throws DomainError for parameters outside their valid ranges.
  void validate() const;
};

/// Correlation at distance d > 0 (1 at d = 0).
double correlation_at(const CorrelationStructure& s, double d, double d_min = 0.0,
                      double d_max = 0.0);

/// Correlation matrix over a symmetric distance matrix. Throws DomainError
/// naming the parameters when the result has an eigenvalue below -1e-8.
Eigen::MatrixXd corr_structure_eval(const CorrelationStructure& s, const Eigen::MatrixXd& distances,
                                    bool check_psd = true);

/// Pairwise distances between dyad midpoints, dyads in upper-triangle order.
Eigen::MatrixXd dyad_distances(const Eigen::Matrix3Xd& coordinates);

/// Unit-diagonal correlation matrix from T(T-1)/2 unconstrained values,
/// through a Cholesky factor whose rows have unit norm.
Eigen::MatrixXd unstructured_correlation(const Eigen::VectorXd& params, int size);

struct TaskCorrelation {
  enum class Mode { Independent, Patterned, Unstructured };
  Mode mode = Mode::Independent;
  /// Used in Patterned mode with |task time differences| as distances.
  CorrelationStructure pattern{CorrelationKind::Ar1, 0.5, 1.0, 1.0, 1.0, std::nullopt, std::nullopt};
};

struct TwoPartModel {
  std::vector<std::string> presence_terms{"intercept"};
  std::vector<std::string> strength_terms{"intercept"};
  CorrelationStructure omega;
  TaskCorrelation gamma;
  int quadrature_points = 15;
  int max_evaluations = 2000;
};

struct TwoPartFit {
  std::vector<std::string> presence_terms;
  std::vector<std::string> strength_terms;

  Eigen::VectorXd beta_v;
  Eigen::VectorXd beta_v_se;
  double presence_intercept_variance = 0.0;
  double presence_loglik = 0.0;
  bool presence_converged = false;

  Eigen::VectorXd beta_s;
  Eigen::VectorXd beta_s_se;
  double strength_intercept_variance = 0.0;
  /// Residual variance per task.
  Eigen::VectorXd residual_variance;
  CorrelationStructure omega;
  /// Natural-scale standard errors in parameter_names() order.
  std::vector<double> omega_se;
  Eigen::MatrixXd gamma;
  std::vector<double> gamma_params;
  std::vector<double> gamma_se;
  double strength_loglik = 0.0;
  bool strength_converged = false;

  int evaluations = 0;
  /// Best objective value after every 50 evaluations of each optimizer.
  std::vector<double> trace;
};

/// Part I: logistic random-intercept model of presence by adaptive
/// Gauss-Hermite quadrature. Part II: Gaussian model of Fisher-Z strength
/// with a subject random intercept and residual covariance
/// sigma^2(task) [Gamma x Omega], by profile maximum likelihood with the
/// fixed effects solved by generalized least squares.
TwoPartFit twopart_fit(const DyadDataset& data, const TwoPartModel& model);

/// Part II parameters at which to evaluate the log-likelihood.
struct StrengthParameters {
  Eigen::VectorXd beta;
  double intercept_variance = 0.0;
  Eigen::VectorXd residual_variance;  // per task
  CorrelationStructure omega;
  Eigen::MatrixXd gamma;
};

/// Part II log-likelihood over present rows at fixed parameters.
double strength_loglik(const DyadDataset& data, const std::vector<std::string>& terms,
                       const StrengthParameters& params);

/// Gaussian log-likelihood of per-subject residual blocks (tasks x dyads)
/// with covariance sigma2(task)[Gamma x Omega], via the Kronecker factors.
double kronecker_loglik(const std::vector<Eigen::MatrixXd>& residuals, const Eigen::MatrixXd& gamma,
                        const Eigen::MatrixXd& omega, const Eigen::VectorXd& sigma2_task);

struct TwoPartPrediction {
  double presence_probability = 0.0;
  double expected_strength = 0.0;
};

/// Population-average predictions. Every non-intercept term of the fit must
/// be given, and no unknown names are accepted.
TwoPartPrediction twopart_predict(const TwoPartFit& fit,
                                  const std::map<std::string, double>& covariates);

}  // namespace fcnet
