#pragma once

#include <Eigen/Core>
#include <map>
#include <string>

#include "fcnet/ingest.hpp"

namespace fcnet {

enum class Measure { Correlation, PartialCorrelation, Coherence, MutualInformation, Synchronization };

std::string to_string(Measure measure);
Measure parse_measure(const std::string& text);

/// True for the measures whose entries are correlation coefficients.
inline bool is_correlation_family(Measure m) {
  return m == Measure::Correlation || m == Measure::PartialCorrelation;
}

/// Symmetric n x n association matrix with a zero diagonal.
struct ConnectionMatrix {
  Eigen::MatrixXd values;
  Measure measure = Measure::Correlation;
  std::map<std::string, double> params;

  Eigen::Index size() const { return values.rows(); }

  /// Throws ShapeError unless square, exactly symmetric, zero diagonal.
  void validate() const;
};

struct DelayEmbedding {
  int lag = 2;
  int dimension = 3;
  int neighbors = 5;

  void validate(Eigen::Index series_length) const;
};

/// Pearson correlation for every node pair of a node x time block.
ConnectionMatrix correlation_matrix(const Eigen::MatrixXd& series);

/// Partial correlations from the inverse of the shrunk covariance
/// (1 - shrinkage) S + shrinkage diag(S).
ConnectionMatrix partial_correlation_matrix(const Eigen::MatrixXd& series, double shrinkage = 0.0);

struct CoherenceOptions {
  BandSpec band{0.01, 0.1};
  int segment_count = 8;
  double sampling_interval = 1.0;
};

/// Welch-averaged magnitude-squared coherence for one pair, one value per
/// frequency bin in the band.
Eigen::VectorXd coherence_spectrum(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                   const CoherenceOptions& options);

/// Band-mean magnitude-squared coherence per pair.
ConnectionMatrix coherence_matrix(const Eigen::MatrixXd& series, const CoherenceOptions& options);

/// Default equiprobable bin count: ceil(sqrt(T / 5)), at least 2.
int default_mi_bins(Eigen::Index length);

/// Plug-in mutual information in bits over a rank-binned 2-D histogram.
/// With `normalize`, divides by the smaller marginal entropy.
ConnectionMatrix mutual_information_matrix(const Eigen::MatrixXd& series, int bins,
                                           bool normalize = false);

/// Nearest-neighbour coincidence of delay embeddings, one value per pair in [0, 1].
ConnectionMatrix synchronization_matrix(const Eigen::MatrixXd& series,
                                        const DelayEmbedding& embedding = {});

/// An estimator with its parameters, so a pipeline can re-run it on new data.
struct EstimatorSpec {
  Measure measure = Measure::Correlation;
  double shrinkage = 0.0;
  CoherenceOptions coherence;
  /// 0 selects default_mi_bins(T).
  int mi_bins = 0;
  bool mi_normalize = false;
  DelayEmbedding embedding;
};

ConnectionMatrix estimate_connectivity(const Eigen::MatrixXd& series, const EstimatorSpec& spec);

}  // namespace fcnet
