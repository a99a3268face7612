#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fcnet/error.hpp"
#include "fcnet/estimate.hpp"
#include "fcnet/ingest.hpp"
#include "fcnet/io.hpp"
#include "fcnet/threshold.hpp"

namespace fcnet {

/// A validation failure carrying every problem found, not just the first.
class ConfigError : public ValidationError {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Analysis types a pipeline can run after estimation and thresholding.
const std::vector<std::string>& analysis_types();

struct AnalysisConfig {
  /// Report file stem, unique within a config; defaults to the type.
  std::string name;
  std::string type;
  /// Parameters with every default filled in.
  Json params;
};

struct PipelineConfig {
  std::filesystem::path input;
  std::optional<BandSpec> bandpass;
  EstimatorSpec estimator;
  ThresholdSpec threshold;
  std::vector<AnalysisConfig> analyses;
  std::uint64_t seed = 0;
  std::filesystem::path output;
  /// The whole config with defaults filled in; its hash identifies a run.
  Json resolved;
};

Json to_json(const EstimatorSpec& spec);
Json to_json(const ThresholdSpec& spec);
/// Missing fields take their defaults; unknown fields are errors.
EstimatorSpec estimator_from_json(const Json& doc);
ThresholdSpec threshold_from_json(const Json& doc);

struct ValidatedPipeline {
  PipelineConfig config;
  TimeSeriesPanel panel;
};

/// Parses the config, resolves `input` against `base`, loads the manifest and
/// checks the prerequisites of every analysis (group sizes, coordinates,
/// covariates, block lengths). Throws ConfigError listing all problems.
ValidatedPipeline validate_pipeline(const Json& doc, const std::filesystem::path& base);

/// Estimates and thresholds every subject, then runs the analyses in order.
/// Writes matrices/, networks/, networks.json, one "<name>.json" report per
/// analysis and provenance.json into the output directory. Reports depend
/// only on the config and the data; timestamps and the worker count appear
/// only in provenance.json. Returns the report paths.
std::vector<std::filesystem::path> run_pipeline(const ValidatedPipeline& pipeline);

}  // namespace fcnet
