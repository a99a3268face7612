#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fcnet/network.hpp"

namespace fcnet {

enum class ErgmTerm { Edges, TwoStars, Triangles };
std::string to_string(ErgmTerm term);
ErgmTerm parse_ergm_term(const std::string& text);

/// Statistics in term order, followed by one entry per dyadic covariate
/// (the sum of the covariate over present edges). Covariates are symmetric
/// n x n matrices; only the upper triangle is read.
struct ErgmSpec {
  std::vector<ErgmTerm> terms{ErgmTerm::Edges};
  std::vector<Eigen::MatrixXd> dyadic_covariates;

  Eigen::Index dimension() const {
    return static_cast<Eigen::Index>(terms.size() + dyadic_covariates.size());
  }
  /// Throws ValidationError unless the edges term is present and no term repeats.
  void validate(int n = -1) const;
};

/// Coefficients for an ErgmSpec. The normalizing constant is never computed;
/// only pseudo-likelihoods and simulations are available.
struct ErgmModel {
  ErgmSpec spec;
  Eigen::VectorXd theta;
};

Eigen::VectorXd ergm_stats(const BinaryNetwork& g, const ErgmSpec& spec);

/// Statistics with dyad (i, j) present minus absent, from local counts.
Eigen::VectorXd ergm_change_stats(const BinaryNetwork& g, int i, int j, const ErgmSpec& spec);

struct ErgmFit {
  ErgmSpec spec;
  Eigen::VectorXd theta;
  Eigen::VectorXd standard_errors;
  bool converged = false;
  int iterations = 0;
  double pseudo_loglik = 0.0;
};

struct MpleOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 100;
};

/// Maximum pseudo-likelihood: logistic regression of each dyad's presence on
/// its change statistics, by Newton-IRLS with step halving. Throws
/// ValidationError for an empty or complete graph and ConvergenceError when
/// the fit separates or the information matrix is singular.
ErgmFit ergm_mple(const BinaryNetwork& g, const ErgmSpec& spec, const MpleOptions& options = {});

struct SimulationOptions {
  /// Toggle proposals before the first draw; negative means 10 n^2.
  long burn_in = -1;
  /// Toggle proposals between draws; negative means n^2.
  long thin = -1;
};

/// Single-dyad-toggle Metropolis chain started from the empty graph. Warns
/// when the density sits at 0 or 1 for more than half of the burn-in.
std::vector<BinaryNetwork> ergm_simulate(const ErgmModel& model, int n, int count,
                                         std::uint64_t seed, const SimulationOptions& options = {});

struct RepresentativeOptions {
  int ensemble = 100;
  SimulationOptions simulation;
};

struct RepresentativeResult {
  BinaryNetwork network;
  Eigen::VectorXd mean_theta;
  /// Mean statistics over the fitted subjects.
  Eigen::VectorXd target_stats;
  Eigen::VectorXd network_stats;
  /// Subjects whose fit failed; they are left out of both means.
  std::vector<int> failed;
};

/// Averages per-subject MPLE fits, simulates an ensemble at the mean theta
/// and returns the draw whose statistics are closest to the group mean.
RepresentativeResult representative_network(const std::vector<BinaryNetwork>& group,
                                             const ErgmSpec& spec, std::uint64_t seed,
                                             const RepresentativeOptions& options = {});

}  // namespace fcnet
