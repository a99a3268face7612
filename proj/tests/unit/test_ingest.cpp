#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "fcnet/ingest.hpp"
#include "fcnet/random.hpp"

using namespace fcnet;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "fcnet_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

Eigen::VectorXd sinusoid(int length, double dt, double hz) {
  Eigen::VectorXd x(length);
  for (int t = 0; t < length; ++t) x[t] = std::sin(2 * std::numbers::pi * hz * t * dt);
  return x;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ca = a.array() - a.mean(), cb = b.array() - b.mean();
  return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

}  // namespace

TEST_CASE("load_timeseries normalizes rows-are-time to node x time") {
  Rng rng(1);
  Eigen::MatrixXd data(4, 100);
  for (auto& v : data.reshaped()) v = standard_normal(rng);
  const auto path = scratch("shape.csv");
  save_timeseries(path, data, Layout::RowsAreTime, {"a", "b", "c", "d"});
  const auto panel = load_timeseries(path, Layout::RowsAreTime);
  CHECK(panel.node_count == 4);
  CHECK(panel.subjects.at(0).data.cols() == 100);
  CHECK(panel.node_labels == std::vector<std::string>{"a", "b", "c", "d"});
  CHECK(panel.subjects[0].data == data);
}

TEST_CASE("save then load is value-identical in both layouts") {
  Eigen::MatrixXd data(3, 7);
  for (int i = 0; i < 3; ++i)
    for (int t = 0; t < 7; ++t) data(i, t) = 0.123456789012 * (i + 1) - 1e-7 * t * t + 3.25e5 * (t == 2);
  for (auto layout : {Layout::RowsAreTime, Layout::RowsAreNodes}) {
    const auto path = scratch("roundtrip.csv");
    save_timeseries(path, data, layout);
    CHECK(load_timeseries(path, layout).subjects[0].data == data);
  }
}

TEST_CASE("loader errors carry the right kind") {
  const auto one_row = scratch("one_row.csv");
  write_text(one_row, "1,2,3,4,5\n");
  CHECK_THROWS_AS(load_timeseries(one_row, Layout::RowsAreTime), LengthError);

  const auto bad = scratch("bad_cell.csv");
  write_text(bad, "1,2\n3,x\n5,6\n7,8\n");
  try {
    load_timeseries(bad, Layout::RowsAreTime);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.row() == 2);
    CHECK(e.column() == 2);
  }

  const auto ragged = scratch("ragged.csv");
  write_text(ragged, "1,2\n3,4,5\n5,6\n7,8\n");
  CHECK_THROWS_AS(load_timeseries(ragged, Layout::RowsAreTime), ShapeError);
  CHECK_THROWS_AS(load_timeseries(scratch("missing.csv"), Layout::RowsAreTime), Error);
}

TEST_CASE("bandpass keeps in-band sinusoids and removes out-of-band ones") {
  const double dt = 2.0;
  const int length = 200;
  const BandSpec band{0.01, 0.1};
  Eigen::MatrixXd x(2, length);
  x.row(0) = sinusoid(length, dt, 0.05).transpose();
  x.row(1) = sinusoid(length, dt, 0.2).transpose();
  const auto y = bandpass_filter(x, band, dt);
  CHECK(pearson(x.row(0).transpose(), y.row(0).transpose()) > 0.95);
  CHECK(y.row(1).squaredNorm() < 0.01 * x.row(1).squaredNorm());
  for (int r = 0; r < 2; ++r) CHECK(std::abs(y.row(r).mean()) < 1e-12);

  // Filtering twice changes nothing further.
  const auto yy = bandpass_filter(y, band, dt);
  CHECK((yy - y).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("bandpass of a constant series is zero when the DC bin is excluded") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(1, 64, 3.7);
  const auto y = bandpass_filter(x, {0.01, 0.1}, 2.0);
  CHECK(y.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("bandpass rejects bands beyond Nyquist") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(1, 64);
  CHECK_THROWS_AS(bandpass_filter(x, {0.01, 0.3}, 2.0), DomainError);
  CHECK_THROWS_AS(bandpass_filter(x, {0.1, 0.05}, 2.0), DomainError);
}

TEST_CASE("fisher_z matches the log form and inverts") {
  CHECK(fisher_z(0.0) == 0.0);
  // Oracle: 0.5 * log((1 + r) / (1 - r)).
  CHECK(fisher_z(0.5) == doctest::Approx(0.5 * std::log(3.0)).epsilon(1e-14));
  CHECK(fisher_z(0.5) == doctest::Approx(0.549306).epsilon(1e-6));
  CHECK_THROWS_AS(fisher_z(1.0), DomainError);
  CHECK_THROWS_AS(fisher_z(-1.2), DomainError);
  double previous = -std::numeric_limits<double>::infinity();
  for (double r = -0.99; r < 0.995; r += 0.01) {
    CHECK(fisher_z(-r) == -fisher_z(r));
    CHECK(std::abs(inverse_fisher_z(fisher_z(r)) - r) < 1e-12);
    CHECK(fisher_z(r) > previous);
    previous = fisher_z(r);
  }
}

TEST_CASE("panel manifest resolves subjects, labels and coordinates") {
  const auto dir = scratch("manifest_dir");
  fs::create_directories(dir);
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(3, 10), b = Eigen::MatrixXd::Random(3, 12);
  save_timeseries(dir / "a.csv", a, Layout::RowsAreTime);
  save_timeseries(dir / "b.csv", b, Layout::RowsAreTime);
  write_text(dir / "m.json", R"({"tr": 2.0, "layout": "rows-are-time",
    "subjects": [{"id": "s1", "file": "a.csv"}, {"id": "s2", "file": "b.csv"}],
    "labels": ["x", "y", "z"], "coordinates": [[0,0,0],[1,0,0],[0,1,0]]})");
  const auto panel = load_panel_manifest(dir / "m.json");
  CHECK(panel.subjects.size() == 2);
  CHECK(panel.subjects[1].id == "s2");
  CHECK(panel.subjects[1].data == b);
  CHECK(panel.sampling_interval == 2.0);
  REQUIRE(panel.coordinates.has_value());
  CHECK((*panel.coordinates)(0, 1) == 1.0);
}

TEST_CASE("operations needing coordinates fail fast without them") {
  TimeSeriesPanel panel;
  CHECK_THROWS_AS(panel.require_coordinates("spc"), ValidationError);
}
