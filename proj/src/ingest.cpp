#include "fcnet/ingest.hpp"

#include <charconv>
#include <complex>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>
#include <unsupported/Eigen/FFT>

namespace fcnet {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view cell) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return std::nullopt;
  double value = 0.0;
  const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || end != cell.data() + cell.size()) return std::nullopt;
  return value;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                       : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

void TimeSeriesPanel::validate() const {
  if (node_count <= 0) throw ShapeError("panel has no nodes");
  if (subjects.empty()) throw ShapeError("panel has no subjects");
  if (!(sampling_interval > 0.0)) throw DomainError("sampling interval must be positive");
  if (!node_labels.empty() && static_cast<Eigen::Index>(node_labels.size()) != node_count)
    throw ShapeError("label count does not match node count");
  if (coordinates && coordinates->cols() != node_count)
    throw ShapeError("coordinate count does not match node count");
  for (const auto& s : subjects) {
    if (s.data.rows() != node_count)
      throw ShapeError("subject '" + s.id + "' has " + std::to_string(s.data.rows()) +
                       " nodes, expected " + std::to_string(node_count));
    if (s.data.cols() < 3)
      throw LengthError("subject '" + s.id + "' has fewer than 3 time points");
    if (!s.data.allFinite()) throw DomainError("subject '" + s.id + "' has non-finite values");
  }
}

const Eigen::Matrix3Xd& TimeSeriesPanel::require_coordinates(const std::string& purpose) const {
  if (!coordinates) throw ValidationError(purpose + " requires node coordinates");
  return *coordinates;
}

void BandSpec::validate(double sampling_interval) const {
  const double nyquist = 0.5 / sampling_interval;
  if (!(low_hz >= 0.0 && low_hz < high_hz && high_hz <= nyquist))
    throw DomainError("band [" + std::to_string(low_hz) + ", " + std::to_string(high_hz) +
                      "] Hz is invalid for Nyquist " + std::to_string(nyquist) + " Hz");
}

Layout parse_layout(const std::string& text) {
  if (text == "rows-are-time") return Layout::RowsAreTime;
  if (text == "rows-are-nodes") return Layout::RowsAreNodes;
  throw ValidationError("unknown layout '" + text + "'");
}

std::string to_string(Layout layout) {
  return layout == Layout::RowsAreTime ? "rows-are-time" : "rows-are-nodes";
}

CsvTable read_numeric_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());

  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  long row_number = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++row_number;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    std::vector<double> values;
    values.reserve(cells.size());
    std::optional<long> bad_column;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (auto v = parse_number(cells[c])) {
        values.push_back(*v);
      } else if (!bad_column) {
        bad_column = static_cast<long>(c + 1);
      }
    }
    if (rows.empty() && table.header.empty() && values.empty()) {
      for (auto cell : cells) table.header.emplace_back(trim(cell));
      width = table.header.size();
      continue;
    }
    if (bad_column)
      throw ParseError(path.string() + ": non-numeric cell at row " + std::to_string(row_number) +
                           ", column " + std::to_string(*bad_column),
                       row_number, *bad_column);
    if (width == 0) width = values.size();
    if (values.size() != width)
      throw ShapeError(path.string() + ": row " + std::to_string(row_number) + " has " +
                       std::to_string(values.size()) + " cells, expected " + std::to_string(width));
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw LengthError(path.string() + ": no numeric rows");

  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c) table.values(r, c) = rows[r][c];
  return table;
}

TimeSeriesPanel load_timeseries(const std::filesystem::path& path, Layout layout,
                                double sampling_interval) {
  auto [labels, table] = read_numeric_csv(path);

  TimeSeriesPanel panel;
  SubjectSeries subject;
  subject.id = path.stem().string();
  subject.data = layout == Layout::RowsAreTime ? Eigen::MatrixXd(table.transpose()) : table;
  if (subject.data.cols() < 3)
    throw LengthError(path.string() + ": " + std::to_string(subject.data.cols()) +
                      " time points, at least 3 required");
  panel.node_count = subject.data.rows();
  if (layout == Layout::RowsAreTime) panel.node_labels = std::move(labels);
  panel.sampling_interval = sampling_interval;
  panel.subjects.push_back(std::move(subject));
  panel.validate();
  return panel;
}

void save_timeseries(const std::filesystem::path& path, const Eigen::MatrixXd& series,
                     Layout layout, const std::vector<std::string>& labels) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  const Eigen::MatrixXd table =
      layout == Layout::RowsAreTime ? Eigen::MatrixXd(series.transpose()) : series;
  if (!labels.empty() && layout == Layout::RowsAreTime) {
    for (std::size_t i = 0; i < labels.size(); ++i) out << (i ? "," : "") << labels[i];
    out << '\n';
  }
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.cols(); ++c) out << (c ? "," : "") << table(r, c);
    out << '\n';
  }
}

TimeSeriesPanel load_panel_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw ValidationError("cannot open manifest " + manifest.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest.string() + ": " + e.what());
  }
  const auto base = manifest.parent_path();
  const double tr = doc.value("tr", 1.0);
  const Layout layout = parse_layout(doc.value("layout", std::string("rows-are-time")));
  if (!doc.contains("subjects") || !doc["subjects"].is_array() || doc["subjects"].empty())
    throw ValidationError(manifest.string() + ": manifest lists no subjects");

  TimeSeriesPanel panel;
  panel.sampling_interval = tr;
  for (const auto& entry : doc["subjects"]) {
    const auto file = std::filesystem::path(entry.at("file").get<std::string>());
    const auto resolved = file.is_absolute() ? file : base / file;
    auto single = load_timeseries(resolved, layout, tr);
    auto subject = std::move(single.subjects.front());
    if (entry.contains("id")) subject.id = entry["id"].get<std::string>();
    if (entry.contains("group")) subject.group = entry["group"].get<std::string>();
    if (entry.contains("covariates"))
      subject.covariates = entry["covariates"].get<std::map<std::string, double>>();
    if (panel.subjects.empty()) {
      panel.node_count = single.node_count;
      panel.node_labels = single.node_labels;
    }
    panel.subjects.push_back(std::move(subject));
  }
  if (doc.contains("labels")) panel.node_labels = doc["labels"].get<std::vector<std::string>>();
  if (doc.contains("coordinates")) {
    const auto coords = doc["coordinates"].get<std::vector<std::vector<double>>>();
    Eigen::Matrix3Xd xyz(3, static_cast<Eigen::Index>(coords.size()));
    for (std::size_t i = 0; i < coords.size(); ++i) {
      if (coords[i].size() != 3) throw ShapeError("coordinates must be 3-vectors");
      xyz.col(static_cast<Eigen::Index>(i)) << coords[i][0], coords[i][1], coords[i][2];
    }
    panel.coordinates = std::move(xyz);
  }
  panel.validate();
  return panel;
}

Eigen::MatrixXd bandpass_filter(const Eigen::MatrixXd& series, const BandSpec& band,
                                double sampling_interval) {
  band.validate(sampling_interval);
  const Eigen::Index length = series.cols();
  Eigen::FFT<double> fft;
  Eigen::MatrixXd filtered(series.rows(), length);
  std::vector<double> signal(static_cast<std::size_t>(length));
  std::vector<std::complex<double>> spectrum;
  std::vector<std::complex<double>> restored;
  const double resolution = 1.0 / (static_cast<double>(length) * sampling_interval);
  for (Eigen::Index node = 0; node < series.rows(); ++node) {
    for (Eigen::Index t = 0; t < length; ++t) signal[t] = series(node, t);
    fft.fwd(spectrum, signal);
    for (Eigen::Index k = 0; k < length; ++k) {
      const double f = static_cast<double>(std::min(k, length - k)) * resolution;
      if (f < band.low_hz || f > band.high_hz) spectrum[k] = 0.0;
    }
    fft.inv(restored, spectrum);
    for (Eigen::Index t = 0; t < length; ++t) filtered(node, t) = restored[t].real();
  }
  return filtered;
}

TimeSeriesPanel bandpass_filter(const TimeSeriesPanel& panel, const BandSpec& band) {
  TimeSeriesPanel out = panel;
  for (auto& subject : out.subjects)
    subject.data = bandpass_filter(subject.data, band, panel.sampling_interval);
  return out;
}

}  // namespace fcnet
