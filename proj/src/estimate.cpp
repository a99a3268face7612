#include "fcnet/estimate.hpp"

#include <algorithm>
#include <complex>
#include <numbers>
#include <numeric>

#include <Eigen/Cholesky>
#include <unsupported/Eigen/FFT>

#include "fcnet/parallel.hpp"

namespace fcnet {

std::string to_string(Measure measure) {
  switch (measure) {
    case Measure::Correlation: return "correlation";
    case Measure::PartialCorrelation: return "partial_correlation";
    case Measure::Coherence: return "coherence";
    case Measure::MutualInformation: return "mutual_information";
    case Measure::Synchronization: return "synchronization";
  }
  return "unknown";
}

Measure parse_measure(const std::string& text) {
  if (text == "correlation") return Measure::Correlation;
  if (text == "partial_correlation" || text == "partial") return Measure::PartialCorrelation;
  if (text == "coherence") return Measure::Coherence;
  if (text == "mutual_information" || text == "mi") return Measure::MutualInformation;
  if (text == "synchronization" || text == "sync") return Measure::Synchronization;
  throw ValidationError("unknown measure '" + text + "'");
}

void ConnectionMatrix::validate() const {
  if (values.rows() != values.cols()) throw ShapeError("connection matrix is not square");
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    if (values(i, i) != 0.0) throw ShapeError("connection matrix diagonal must be zero");
    for (Eigen::Index j = 0; j < i; ++j)
      if (values(i, j) != values(j, i)) throw ShapeError("connection matrix is not symmetric");
  }
  if (!values.allFinite()) throw DomainError("connection matrix has non-finite entries");
}

void DelayEmbedding::validate(Eigen::Index series_length) const {
  if (lag < 1 || dimension < 2 || neighbors < 1)
    throw DomainError("embedding needs lag >= 1, dimension >= 2, neighbors >= 1");
  const Eigen::Index window = static_cast<Eigen::Index>(dimension - 1) * lag;
  if (window >= series_length)
    throw LengthError("series too short for embedding: (m - 1) * l = " + std::to_string(window) +
                      " >= " + std::to_string(series_length));
  const Eigen::Index vectors = series_length - window;
  // Each reference vector excludes the 2 * window - 1 temporal neighbours around it.
  if (vectors - (2 * window - 1) < neighbors)
    throw LengthError("series too short for " + std::to_string(neighbors) +
                      " neighbours outside the exclusion window");
}

namespace {

Eigen::MatrixXd centered_rows(const Eigen::MatrixXd& series) {
  return series.colwise() - series.rowwise().mean();
}

void symmetrize_upper(Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    m(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) m(j, i) = m(i, j);
  }
}

void require_variance(const Eigen::MatrixXd& centered) {
  for (Eigen::Index i = 0; i < centered.rows(); ++i)
    if (centered.row(i).squaredNorm() == 0.0)
      throw DomainError("node " + std::to_string(i) + " has zero variance");
}

}  // namespace

ConnectionMatrix correlation_matrix(const Eigen::MatrixXd& series) {
  if (series.cols() < 3) throw LengthError("correlation needs at least 3 time points");
  const Eigen::MatrixXd centered = centered_rows(series);
  require_variance(centered);
  const Eigen::VectorXd norms = centered.rowwise().norm();
  const Eigen::MatrixXd gram = centered * centered.transpose();
  ConnectionMatrix cm;
  cm.measure = Measure::Correlation;
  cm.values = Eigen::MatrixXd::Zero(series.rows(), series.rows());
  for (Eigen::Index i = 0; i < series.rows(); ++i)
    for (Eigen::Index j = i + 1; j < series.rows(); ++j)
      cm.values(i, j) = std::clamp(gram(i, j) / (norms[i] * norms[j]), -1.0, 1.0);
  symmetrize_upper(cm.values);
  return cm;
}

ConnectionMatrix partial_correlation_matrix(const Eigen::MatrixXd& series, double shrinkage) {
  if (!(shrinkage >= 0.0 && shrinkage <= 1.0)) throw DomainError("shrinkage must lie in [0, 1]");
  const Eigen::Index n = series.rows();
  const Eigen::Index length = series.cols();
  if (length < 3) throw LengthError("partial correlation needs at least 3 time points");
  const Eigen::MatrixXd centered = centered_rows(series);
  require_variance(centered);
  if (shrinkage == 0.0 && length <= n)
    throw DomainError("sample covariance is singular (T = " + std::to_string(length) +
                      " <= n = " + std::to_string(n) + "); use shrinkage > 0");

  const Eigen::MatrixXd covariance =
      centered * centered.transpose() / static_cast<double>(length - 1);
  Eigen::MatrixXd shrunk = (1.0 - shrinkage) * covariance;
  shrunk.diagonal() = covariance.diagonal();
  const Eigen::LLT<Eigen::MatrixXd> llt(shrunk);
  if (llt.info() != Eigen::Success)
    throw DomainError(shrinkage == 0.0
                          ? "sample covariance is not positive definite; use shrinkage > 0"
                          : "shrunk covariance is not positive definite");
  const Eigen::MatrixXd precision = llt.solve(Eigen::MatrixXd::Identity(n, n));

  ConnectionMatrix cm;
  cm.measure = Measure::PartialCorrelation;
  cm.params["shrinkage"] = shrinkage;
  cm.values = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      cm.values(i, j) = std::clamp(
          -precision(i, j) / std::sqrt(precision(i, i) * precision(j, j)), -1.0, 1.0);
  symmetrize_upper(cm.values);
  return cm;
}

namespace {

struct WelchLayout {
  Eigen::Index segment_length;
  Eigen::Index step;
  Eigen::Index segments;
  std::vector<Eigen::Index> bins;
};

WelchLayout welch_layout(Eigen::Index length, const CoherenceOptions& options) {
  if (options.segment_count < 1) throw DomainError("segment_count must be >= 1");
  options.band.validate(options.sampling_interval);
  WelchLayout layout;
  layout.segment_length = 2 * length / (options.segment_count + 1);
  if (layout.segment_length < 8)
    throw LengthError("coherence segments would have " + std::to_string(layout.segment_length) +
                      " samples; at least 8 required");
  layout.step = std::max<Eigen::Index>(1, layout.segment_length / 2);
  layout.segments = (length - layout.segment_length) / layout.step + 1;
  const double resolution =
      1.0 / (static_cast<double>(layout.segment_length) * options.sampling_interval);
  for (Eigen::Index k = 0; k <= layout.segment_length / 2; ++k) {
    const double f = static_cast<double>(k) * resolution;
    if (f >= options.band.low_hz && f <= options.band.high_hz) layout.bins.push_back(k);
  }
  if (layout.bins.empty()) throw DomainError("band contains no FFT bins at this segment length");
  return layout;
}

// Per-segment tapered spectra restricted to the band bins: segments x bins.
Eigen::MatrixXcd segment_spectra(const Eigen::VectorXd& x, const WelchLayout& layout) {
  Eigen::FFT<double> fft;
  const Eigen::Index len = layout.segment_length;
  std::vector<double> buffer(static_cast<std::size_t>(len));
  std::vector<std::complex<double>> spectrum;
  Eigen::MatrixXcd out(layout.segments, static_cast<Eigen::Index>(layout.bins.size()));
  for (Eigen::Index s = 0; s < layout.segments; ++s) {
    const auto segment = x.segment(s * layout.step, len);
    const double mu = segment.mean();
    for (Eigen::Index t = 0; t < len; ++t) {
      const double taper =
          0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(t) /
                                static_cast<double>(len - 1)));
      buffer[t] = taper * (segment[t] - mu);
    }
    fft.fwd(spectrum, buffer);
    for (std::size_t b = 0; b < layout.bins.size(); ++b)
      out(s, static_cast<Eigen::Index>(b)) = spectrum[layout.bins[b]];
  }
  return out;
}

Eigen::VectorXd coherence_from_spectra(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::VectorXd result(a.cols());
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    std::complex<double> cross = 0.0;
    double pa = 0.0, pb = 0.0;
    for (Eigen::Index s = 0; s < a.rows(); ++s) {
      cross += a(s, k) * std::conj(b(s, k));
      pa += std::norm(a(s, k));
      pb += std::norm(b(s, k));
    }
    const double denom = pa * pb;
    result[k] = denom > 0.0 ? std::min(1.0, std::norm(cross) / denom) : 0.0;
  }
  return result;
}

}  // namespace

Eigen::VectorXd coherence_spectrum(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                   const CoherenceOptions& options) {
  if (x.size() != y.size()) throw ShapeError("coherence: series lengths differ");
  const auto layout = welch_layout(x.size(), options);
  return coherence_from_spectra(segment_spectra(x, layout), segment_spectra(y, layout));
}

ConnectionMatrix coherence_matrix(const Eigen::MatrixXd& series, const CoherenceOptions& options) {
  const auto layout = welch_layout(series.cols(), options);
  const Eigen::Index n = series.rows();
  std::vector<Eigen::MatrixXcd> spectra(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    spectra[i] = segment_spectra(series.row(static_cast<Eigen::Index>(i)).transpose(), layout);
  });
  ConnectionMatrix cm;
  cm.measure = Measure::Coherence;
  cm.params = {{"low_hz", options.band.low_hz},
               {"high_hz", options.band.high_hz},
               {"segment_count", options.segment_count},
               {"sampling_interval", options.sampling_interval}};
  cm.values = Eigen::MatrixXd::Zero(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    for (std::size_t j = i + 1; j < static_cast<std::size_t>(n); ++j)
      cm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          coherence_from_spectra(spectra[i], spectra[j]).mean();
  });
  symmetrize_upper(cm.values);
  return cm;
}

int default_mi_bins(Eigen::Index length) {
  return std::max(2, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(length) / 5.0))));
}

namespace {

std::vector<int> rank_bins(const Eigen::VectorXd& x, int bins, Eigen::Index node) {
  const Eigen::Index length = x.size();
  if (x.maxCoeff() == x.minCoeff())
    throw DomainError("node " + std::to_string(node) + " is constant; bins are undefined");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(length));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<int> out(static_cast<std::size_t>(length));
  for (Eigen::Index r = 0; r < length; ++r)
    out[order[r]] = static_cast<int>((r * bins) / length);
  return out;
}

double entropy_bits(const std::vector<long>& counts, double total) {
  double h = 0.0;
  for (long c : counts)
    if (c > 0) h += (static_cast<double>(c) / total) * std::log2(total / static_cast<double>(c));
  return h;
}

}  // namespace

ConnectionMatrix mutual_information_matrix(const Eigen::MatrixXd& series, int bins,
                                           bool normalize) {
  if (bins < 2) throw DomainError("mutual information needs at least 2 bins");
  const Eigen::Index n = series.rows();
  const Eigen::Index length = series.cols();
  const double total = static_cast<double>(length);
  std::vector<std::vector<int>> binned(static_cast<std::size_t>(n));
  std::vector<double> entropy(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    binned[i] = rank_bins(series.row(i).transpose(), bins, i);
    std::vector<long> counts(static_cast<std::size_t>(bins), 0);
    for (int b : binned[i]) ++counts[b];
    entropy[i] = entropy_bits(counts, total);
  }

  ConnectionMatrix cm;
  cm.measure = Measure::MutualInformation;
  cm.params = {{"bins", bins}, {"normalized", normalize ? 1.0 : 0.0}};
  cm.values = Eigen::MatrixXd::Zero(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    std::vector<long> joint(static_cast<std::size_t>(bins) * bins);
    std::vector<long> ca(static_cast<std::size_t>(bins)), cb(static_cast<std::size_t>(bins));
    for (std::size_t j = i + 1; j < static_cast<std::size_t>(n); ++j) {
      std::fill(joint.begin(), joint.end(), 0);
      std::fill(ca.begin(), ca.end(), 0);
      std::fill(cb.begin(), cb.end(), 0);
      for (Eigen::Index t = 0; t < length; ++t) {
        const int a = binned[i][t], b = binned[j][t];
        ++joint[static_cast<std::size_t>(a) * bins + b];
        ++ca[a];
        ++cb[b];
      }
      double mi = 0.0;
      for (int a = 0; a < bins; ++a)
        for (int b = 0; b < bins; ++b) {
          const long c = joint[static_cast<std::size_t>(a) * bins + b];
          if (c == 0) continue;
          // Same expression as the marginal entropy so I(X, X) == H(X) exactly.
          mi += (static_cast<double>(c) / total) *
                std::log2((total / static_cast<double>(ca[a])) *
                          (static_cast<double>(c) / static_cast<double>(cb[b])));
        }
      mi = std::max(0.0, mi);
      if (normalize) {
        const double h = std::min(entropy[i], entropy[j]);
        mi = h > 0.0 ? std::min(1.0, mi / h) : 0.0;
      }
      cm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = mi;
    }
  });
  symmetrize_upper(cm.values);
  return cm;
}

namespace {

// k nearest neighbours of every delay vector, sorted by index for intersection.
std::vector<std::vector<int>> embedding_neighbours(const Eigen::VectorXd& x,
                                                   const DelayEmbedding& e) {
  const Eigen::Index window = static_cast<Eigen::Index>(e.dimension - 1) * e.lag;
  const Eigen::Index vectors = x.size() - window;
  Eigen::MatrixXd embedded(e.dimension, vectors);
  for (Eigen::Index b = 0; b < vectors; ++b)
    for (int d = 0; d < e.dimension; ++d) embedded(d, b) = x[b + d * e.lag];

  std::vector<std::vector<int>> result(static_cast<std::size_t>(vectors));
  std::vector<std::pair<double, int>> candidates;
  for (Eigen::Index b = 0; b < vectors; ++b) {
    candidates.clear();
    for (Eigen::Index c = 0; c < vectors; ++c) {
      if (std::abs(c - b) < window) continue;
      candidates.emplace_back((embedded.col(c) - embedded.col(b)).squaredNorm(),
                              static_cast<int>(c));
    }
    std::partial_sort(candidates.begin(), candidates.begin() + e.neighbors, candidates.end());
    auto& nn = result[b];
    for (int k = 0; k < e.neighbors; ++k) nn.push_back(candidates[k].second);
    std::sort(nn.begin(), nn.end());
  }
  return result;
}

double directed_sync(const std::vector<std::vector<int>>& from,
                     const std::vector<std::vector<int>>& to, int k) {
  double total = 0.0;
  std::vector<int> shared;
  for (std::size_t b = 0; b < from.size(); ++b) {
    shared.clear();
    std::set_intersection(from[b].begin(), from[b].end(), to[b].begin(), to[b].end(),
                          std::back_inserter(shared));
    total += static_cast<double>(shared.size()) / k;
  }
  return total / static_cast<double>(from.size());
}

}  // namespace

ConnectionMatrix synchronization_matrix(const Eigen::MatrixXd& series,
                                        const DelayEmbedding& embedding) {
  embedding.validate(series.cols());
  const Eigen::Index n = series.rows();
  std::vector<std::vector<std::vector<int>>> neighbours(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    neighbours[i] = embedding_neighbours(series.row(static_cast<Eigen::Index>(i)).transpose(),
                                         embedding);
  });
  ConnectionMatrix cm;
  cm.measure = Measure::Synchronization;
  cm.params = {{"lag", embedding.lag},
               {"dimension", embedding.dimension},
               {"neighbors", embedding.neighbors}};
  cm.values = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      cm.values(i, j) = 0.5 * (directed_sync(neighbours[i], neighbours[j], embedding.neighbors) +
                               directed_sync(neighbours[j], neighbours[i], embedding.neighbors));
  symmetrize_upper(cm.values);
  return cm;
}

ConnectionMatrix estimate_connectivity(const Eigen::MatrixXd& series, const EstimatorSpec& spec) {
  switch (spec.measure) {
    case Measure::Correlation: return correlation_matrix(series);
    case Measure::PartialCorrelation: return partial_correlation_matrix(series, spec.shrinkage);
    case Measure::Coherence: return coherence_matrix(series, spec.coherence);
    case Measure::MutualInformation:
      return mutual_information_matrix(
          series, spec.mi_bins > 0 ? spec.mi_bins : default_mi_bins(series.cols()), spec.mi_normalize);
    case Measure::Synchronization: return synchronization_matrix(series, spec.embedding);
  }
  throw ValidationError("unknown measure");
}

}  // namespace fcnet
