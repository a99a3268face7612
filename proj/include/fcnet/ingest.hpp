#pragma once

#include <Eigen/Core>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fcnet/error.hpp"

namespace fcnet {

/// One subject's signals, stored node x time.
struct SubjectSeries {
  std::string id;
  Eigen::MatrixXd data;
  /// Optional design information from the manifest.
  std::string group;
  std::map<std::string, double> covariates;
};

/// Parcellated multi-subject time series. Immutable once validated.
struct TimeSeriesPanel {
  std::vector<SubjectSeries> subjects;
  Eigen::Index node_count = 0;
  std::vector<std::string> node_labels;
  std::optional<Eigen::Matrix3Xd> coordinates;
  double sampling_interval = 1.0;  // seconds per scan (TR)

  /// Throws if any subject violates the shape or finiteness invariants.
  void validate() const;

  /// Coordinates or a ValidationError naming `purpose`.
  const Eigen::Matrix3Xd& require_coordinates(const std::string& purpose) const;
};

struct BandSpec {
  double low_hz = 0.01;
  double high_hz = 0.1;

  /// Throws DomainError unless 0 <= low < high <= Nyquist.
  void validate(double sampling_interval) const;
};

enum class Layout { RowsAreTime, RowsAreNodes };

Layout parse_layout(const std::string& text);
std::string to_string(Layout layout);

/// Comma-delimited numeric table; `header` holds the optional first row of
/// non-numeric cells. Cells parse as decimal or scientific, nan and inf included.
struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

/// Throws ParseError (with row and column) on a non-numeric cell and
/// ShapeError on ragged rows.
CsvTable read_numeric_csv(const std::filesystem::path& path);

/// Reads a comma-delimited numeric file. An optional first row of non-numeric
/// cells is taken as node labels. The result is a one-subject panel.
TimeSeriesPanel load_timeseries(const std::filesystem::path& path, Layout layout,
                                double sampling_interval = 1.0);

/// Writes one subject in the given layout, with a label header when labels exist.
void save_timeseries(const std::filesystem::path& path, const Eigen::MatrixXd& series,
                     Layout layout, const std::vector<std::string>& labels = {});

/// Loads a JSON manifest:
/// {"tr": 2.0, "layout": "rows-are-time",
///  "subjects": [{"id": "s1", "file": "s1.csv", "group": "patient", "covariates": {"age": 31}}],
///  "labels": [...], "coordinates": [[x, y, z], ...]}
/// Relative file paths resolve against the manifest's directory.
TimeSeriesPanel load_panel_manifest(const std::filesystem::path& manifest);

/// Frequency-domain band-pass: FFT bins outside [low_hz, high_hz] are zeroed.
/// The DC bin survives only when low_hz == 0.
Eigen::MatrixXd bandpass_filter(const Eigen::MatrixXd& series, const BandSpec& band,
                                double sampling_interval);

TimeSeriesPanel bandpass_filter(const TimeSeriesPanel& panel, const BandSpec& band);

template <typename Scalar>
Scalar fisher_z(Scalar r) {
  if (!(std::abs(r) < Scalar(1)))
    throw DomainError("fisher_z: |r| must be < 1, got " + std::to_string(r));
  return std::atanh(r);
}

template <typename Scalar>
Scalar inverse_fisher_z(Scalar z) {
  return std::tanh(z);
}

}  // namespace fcnet
