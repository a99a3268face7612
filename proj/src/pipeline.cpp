#include "fcnet/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <functional>
#include <map>
#include <set>

#include "fcnet/community.hpp"
#include "fcnet/diagnostics.hpp"
#include "fcnet/ergm.hpp"
#include "fcnet/errorprop.hpp"
#include "fcnet/graph.hpp"
#include "fcnet/groupstat.hpp"
#include "fcnet/mixedmodel.hpp"
#include "fcnet/nullmodel.hpp"
#include "fcnet/parallel.hpp"
#include "fcnet/random.hpp"

#ifndef FCNET_VERSION
#define FCNET_VERSION "unknown"
#endif

namespace fcnet {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) out += (k ? sep : "") + parts[k];
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : ValidationError("invalid configuration: " + join(problems, "; ")),
      problems_(std::move(problems)) {}

const std::vector<std::string>& analysis_types() {
  static const std::vector<std::string> types{"metrics", "smallworld", "community", "compare",
                                              "ergm",    "twopart",    "bootstrap"};
  return types;
}

namespace {

using Problems = std::vector<std::string>;

const char* kind_name(const Json& j) {
  if (j.is_number_integer()) return "an integer";
  if (j.is_number()) return "a number";
  if (j.is_string()) return "a string";
  if (j.is_boolean()) return "a boolean";
  if (j.is_array()) return "an array";
  if (j.is_object()) return "an object";
  return "null";
}

bool same_kind(const Json& expected, const Json& given) {
  if (expected.is_number_integer()) return given.is_number_integer();
  if (expected.is_number()) return given.is_number();
  return expected.type() == given.type();
}

// Defaults overlaid with the given fields; unknown fields and wrong types are
// recorded rather than thrown so every problem is reported at once.
Json merge_params(const Json& defaults, const Json& given, const std::string& where,
                  Problems& problems) {
  Json out = defaults;
  if (given.is_null()) return out;
  if (!given.is_object()) {
    problems.push_back(where + " must be an object");
    return out;
  }
  for (auto it = given.begin(); it != given.end(); ++it) {
    if (!defaults.contains(it.key())) {
      problems.push_back(where + ": unknown field '" + it.key() + "'");
    } else if (!same_kind(defaults[it.key()], it.value())) {
      problems.push_back(where + "." + it.key() + " must be " + kind_name(defaults[it.key()]));
    } else {
      out[it.key()] = it.value();
    }
  }
  return out;
}

// Runs a parse step, turning library validation errors into problems.
template <typename Fn>
void check(Problems& problems, const std::string& where, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    problems.push_back(where + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    problems.push_back(where + ": " + e.what());
  }
}

Json estimator_defaults() {
  return {{"measure", "correlation"}, {"shrinkage", 0.0}, {"bins", 0},
          {"normalize", false},       {"band", {0.01, 0.1}}, {"segments", 8},
          {"lag", 2},                 {"dimension", 3},    {"neighbors", 5}};
}

Json threshold_defaults() {
  return {{"strategy", "significance"}, {"tau", 0.0},    {"alpha", 0.05},
          {"correction", "bonferroni"}, {"k", 4.0},      {"density", 0.1},
          {"exponent", 2.5},            {"negative", "drop"}};
}

EstimatorSpec parse_estimator(const Json& given, Problems& problems, Json& resolved) {
  resolved = merge_params(estimator_defaults(), given, "estimator", problems);
  EstimatorSpec spec;
  check(problems, "estimator.measure",
        [&] { spec.measure = parse_measure(resolved["measure"].get<std::string>()); });
  spec.shrinkage = resolved["shrinkage"].get<double>();
  if (!(spec.shrinkage >= 0.0 && spec.shrinkage <= 1.0))
    problems.push_back("estimator.shrinkage must lie in [0, 1]");
  spec.mi_bins = resolved["bins"].get<int>();
  if (spec.mi_bins < 0 || spec.mi_bins == 1) problems.push_back("estimator.bins must be 0 or >= 2");
  spec.mi_normalize = resolved["normalize"].get<bool>();
  check(problems, "estimator.band", [&] {
    const auto band = resolved["band"].get<std::vector<double>>();
    if (band.size() != 2) throw ValidationError("expected [low_hz, high_hz]");
    spec.coherence.band = {band[0], band[1]};
  });
  spec.coherence.segment_count = resolved["segments"].get<int>();
  if (spec.coherence.segment_count < 1) problems.push_back("estimator.segments must be >= 1");
  spec.embedding = {resolved["lag"].get<int>(), resolved["dimension"].get<int>(),
                    resolved["neighbors"].get<int>()};
  if (spec.embedding.lag < 1 || spec.embedding.dimension < 1 || spec.embedding.neighbors < 1)
    problems.push_back("estimator lag, dimension and neighbors must be >= 1");
  return spec;
}

ThresholdSpec parse_threshold(const Json& given, Problems& problems, Json& resolved) {
  resolved = merge_params(threshold_defaults(), given, "threshold", problems);
  ThresholdSpec spec;
  check(problems, "threshold.strategy", [&] {
    spec.strategy = parse_threshold_strategy(resolved["strategy"].get<std::string>());
  });
  check(problems, "threshold.correction",
        [&] { spec.correction = parse_correction(resolved["correction"].get<std::string>()); });
  check(problems, "threshold.negative",
        [&] { spec.negative = parse_negative_policy(resolved["negative"].get<std::string>()); });
  spec.tau = resolved["tau"].get<double>();
  spec.alpha = resolved["alpha"].get<double>();
  spec.k = resolved["k"].get<double>();
  spec.density = resolved["density"].get<double>();
  spec.exponent = resolved["exponent"].get<double>();
  switch (spec.strategy) {
    case ThresholdStrategy::Significance:
      if (!(spec.alpha > 0.0 && spec.alpha < 1.0))
        problems.push_back("threshold.alpha must lie in (0, 1)");
      break;
    case ThresholdStrategy::FixedDegree:
      if (!(spec.k > 0.0)) problems.push_back("threshold.k must be positive");
      break;
    case ThresholdStrategy::FixedDensity:
      if (!(spec.density > 0.0 && spec.density <= 1.0))
        problems.push_back("threshold.density must lie in (0, 1]");
      break;
    case ThresholdStrategy::PathExponent:
      if (!(spec.exponent > 0.0)) problems.push_back("threshold.exponent must be positive");
      break;
    default: break;
  }
  return spec;
}

}  // namespace

Json to_json(const EstimatorSpec& spec) {
  return {{"measure", to_string(spec.measure)},
          {"shrinkage", spec.shrinkage},
          {"bins", spec.mi_bins},
          {"normalize", spec.mi_normalize},
          {"band", {spec.coherence.band.low_hz, spec.coherence.band.high_hz}},
          {"segments", spec.coherence.segment_count},
          {"lag", spec.embedding.lag},
          {"dimension", spec.embedding.dimension},
          {"neighbors", spec.embedding.neighbors}};
}

Json to_json(const ThresholdSpec& spec) {
  return {{"strategy", to_string(spec.strategy)},
          {"tau", spec.tau},
          {"alpha", spec.alpha},
          {"correction", to_string(spec.correction)},
          {"k", spec.k},
          {"density", spec.density},
          {"exponent", spec.exponent},
          {"negative", spec.negative == NegativePolicy::Drop ? "drop" : "absolute"}};
}

EstimatorSpec estimator_from_json(const Json& doc) {
  Problems problems;
  Json resolved;
  auto spec = parse_estimator(doc, problems, resolved);
  if (!problems.empty()) throw ConfigError(problems);
  return spec;
}

ThresholdSpec threshold_from_json(const Json& doc) {
  Problems problems;
  Json resolved;
  auto spec = parse_threshold(doc, problems, resolved);
  if (!problems.empty()) throw ConfigError(problems);
  return spec;
}

namespace {

Json analysis_defaults(const std::string& type) {
  if (type == "metrics")
    return {{"metrics", {"density", "global_efficiency", "clustering", "path_length"}},
            {"centrality", Json::array()}};
  if (type == "smallworld")
    return {{"null_count", 20}, {"swaps_per_edge", 10}, {"clustering", "mean_local"}};
  if (type == "community")
    return {{"method", "louvain"}, {"runs", 10}, {"max_communities", 0}, {"roles", true}};
  if (type == "compare")
    return {{"method", "nbs"},         {"group_a", ""},       {"group_b", ""},
            {"t_threshold", 3.0},      {"permutations", 1000}, {"tail", "two-sided"},
            {"correction", "bh-fdr"},  {"radius", 0.0}};
  if (type == "ergm")
    return {{"terms", {"edges"}}, {"representative", false}, {"ensemble", 100}};
  if (type == "twopart")
    return {{"presence_terms", {"intercept"}},
            {"strength_terms", {"intercept"}},
            {"subject_covariates", Json::array()},
            {"dyad_covariates", Json::array()},
            {"omega", {{"kind", "identity"}}},
            {"presence_threshold", 0.0},
            {"quadrature_points", 15},
            {"max_evaluations", 2000}};
  if (type == "bootstrap")
    return {{"metric", "density"}, {"replicates", 200}, {"block_length", 0}, {"level", 0.95}};
  return Json::object();
}

Json omega_defaults() {
  return {{"kind", "identity"}, {"rho", 0.5}, {"delta", 1.0}, {"nu", 1.0}, {"phi", 1.0}};
}

CorrelationStructure parse_omega(const Json& resolved) {
  CorrelationStructure s;
  s.kind = parse_correlation_kind(resolved["kind"].get<std::string>());
  s.rho = resolved["rho"].get<double>();
  s.delta = resolved["delta"].get<double>();
  s.nu = resolved["nu"].get<double>();
  s.phi = resolved["phi"].get<double>();
  return s;
}

bool safe_name(const std::string& s) {
  return !s.empty() && s != "." && s != ".." &&
         std::all_of(s.begin(), s.end(), [](char c) {
           return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
         });
}

std::vector<std::size_t> group_members(const TimeSeriesPanel& panel, const std::string& group) {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < panel.subjects.size(); ++s)
    if (panel.subjects[s].group == group) out.push_back(s);
  return out;
}

void validate_analysis(const AnalysisConfig& a, const PipelineConfig& cfg,
                       const TimeSeriesPanel* panel, Problems& problems) {
  const std::string where = "analysis '" + a.name + "'";
  const Json& p = a.params;
  const auto need_coordinates = [&](const std::string& what) {
    if (panel && !panel->coordinates)
      problems.push_back(where + ": " + what + " requires node coordinates in the input manifest");
  };
  if (a.type == "metrics") {
    for (const auto& m : p["metrics"]) {
      const auto& names = scalar_metric_names();
      if (!m.is_string() || std::find(names.begin(), names.end(), m.get<std::string>()) == names.end())
        problems.push_back(where + ": unknown metric " + m.dump() + " (known: " + join(names, ", ") +
                           ")");
    }
    for (const auto& c : p["centrality"])
      check(problems, where, [&] { parse_centrality_kind(c.get<std::string>()); });
  } else if (a.type == "smallworld") {
    if (p["null_count"].get<int>() < 1) problems.push_back(where + ": null_count must be >= 1");
    if (p["swaps_per_edge"].get<int>() < 1)
      problems.push_back(where + ": swaps_per_edge must be >= 1");
    check(problems, where, [&] { parse_clustering_variant(p["clustering"].get<std::string>()); });
  } else if (a.type == "community") {
    const auto method = p["method"].get<std::string>();
    if (method != "louvain" && method != "girvan_newman")
      problems.push_back(where + ": method must be louvain or girvan_newman");
    if (p["runs"].get<int>() < 1) problems.push_back(where + ": runs must be >= 1");
    if (method == "girvan_newman" && panel && panel->node_count > kGirvanNewmanMaxNodes)
      problems.push_back(where + ": girvan_newman is limited to " +
                         std::to_string(kGirvanNewmanMaxNodes) + " nodes");
  } else if (a.type == "compare") {
    const auto method = p["method"].get<std::string>();
    if (method != "edgewise" && method != "nbs" && method != "spc")
      problems.push_back(where + ": method must be edgewise, nbs or spc");
    const auto ga = p["group_a"].get<std::string>(), gb = p["group_b"].get<std::string>();
    if (ga.empty() || gb.empty() || ga == gb)
      problems.push_back(where + ": group_a and group_b must name two different groups");
    else if (panel)
      for (const auto& g : {ga, gb})
        if (group_members(*panel, g).size() < 2)
          problems.push_back(where + ": group '" + g + "' needs at least 2 subjects");
    check(problems, where, [&] { parse_tail(p["tail"].get<std::string>()); });
    check(problems, where, [&] { parse_correction(p["correction"].get<std::string>()); });
    if (method != "edgewise" && p["permutations"].get<int>() < 100)
      problems.push_back(where + ": permutations must be >= 100");
    if (!(p["t_threshold"].get<double>() > 0.0))
      problems.push_back(where + ": t_threshold must be positive");
    if (method == "spc") {
      need_coordinates("spc");
      if (!(p["radius"].get<double>() > 0.0))
        problems.push_back(where + ": spc requires a positive adjacency radius");
    }
  } else if (a.type == "ergm") {
    check(problems, where, [&] {
      ErgmSpec spec;
      spec.terms.clear();
      for (const auto& t : p["terms"]) spec.terms.push_back(parse_ergm_term(t.get<std::string>()));
      spec.validate();
    });
    if (p["ensemble"].get<int>() < 1) problems.push_back(where + ": ensemble must be >= 1");
  } else if (a.type == "twopart") {
    if (!is_correlation_family(cfg.estimator.measure))
      problems.push_back(where + ": needs a correlation or partial correlation estimator");
    std::set<std::string> columns{"intercept"};
    for (const auto& c : p["subject_covariates"]) {
      if (!c.is_string()) {
        problems.push_back(where + ": subject_covariates must be names");
        continue;
      }
      const auto name = c.get<std::string>();
      columns.insert(name);
      if (panel)
        for (const auto& s : panel->subjects)
          if (!s.covariates.count(name))
            problems.push_back(where + ": subject '" + s.id + "' has no covariate '" + name + "'");
    }
    for (const auto& c : p["dyad_covariates"]) {
      if (c != "distance") {
        problems.push_back(where + ": unknown dyad covariate " + c.dump() + " (known: distance)");
        continue;
      }
      columns.insert("distance");
      need_coordinates("the distance covariate");
    }
    for (const char* key : {"presence_terms", "strength_terms"})
      for (const auto& t : p[key]) {
        const auto name = t.is_string() ? t.get<std::string>() : t.dump();
        const auto colon = name.find(':');
        const bool ok = colon == std::string::npos
                            ? columns.count(name) > 0
                            : columns.count(name.substr(0, colon)) &&
                                  columns.count(name.substr(colon + 1)) &&
                                  name.substr(0, colon) != "intercept";
        if (!ok) problems.push_back(where + ": term '" + name + "' is not an available column");
      }
    Json omega = merge_params(omega_defaults(), p["omega"], where + ".omega", problems);
    check(problems, where + ".omega", [&] {
      const auto s = parse_omega(omega);
      s.validate();
      if (s.kind != CorrelationKind::Identity && s.kind != CorrelationKind::CompoundSymmetry)
        need_coordinates("distance-based omega '" + to_string(s.kind) + "'");
    });
    if (p["quadrature_points"].get<int>() < 1)
      problems.push_back(where + ": quadrature_points must be >= 1");
    if (!(p["presence_threshold"].get<double>() >= 0.0))
      problems.push_back(where + ": presence_threshold must be non-negative");
  } else if (a.type == "bootstrap") {
    const auto& names = scalar_metric_names();
    if (std::find(names.begin(), names.end(), p["metric"].get<std::string>()) == names.end())
      problems.push_back(where + ": unknown metric '" + p["metric"].get<std::string>() + "'");
    if (p["replicates"].get<int>() < 1) problems.push_back(where + ": replicates must be >= 1");
    const int block = p["block_length"].get<int>();
    if (block == 1 || block < 0) problems.push_back(where + ": block_length must be 0 or >= 2");
    if (panel && block > 0)
      for (const auto& s : panel->subjects)
        if (block > s.data.cols())
          problems.push_back(where + ": block_length exceeds the " +
                             std::to_string(s.data.cols()) + " time points of '" + s.id + "'");
    const double level = p["level"].get<double>();
    if (!(level > 0.0 && level < 1.0)) problems.push_back(where + ": level must lie in (0, 1)");
  }
}

}  // namespace

ValidatedPipeline validate_pipeline(const Json& doc, const fs::path& base) {
  if (!doc.is_object()) throw ConfigError({"the configuration must be a JSON object"});
  Problems problems;
  ValidatedPipeline vp;
  auto& cfg = vp.config;
  static const std::set<std::string> known{"input",     "bandpass", "estimator", "threshold",
                                           "analyses",  "seed",     "output"};
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!known.count(it.key())) problems.push_back("unknown top-level field '" + it.key() + "'");

  bool have_panel = false;
  if (!doc.contains("input") || !doc["input"].is_string()) {
    problems.push_back("input must name a panel manifest");
  } else {
    const fs::path input = doc["input"].get<std::string>();
    cfg.input = input.is_absolute() ? input : base / input;
    if (!fs::exists(cfg.input)) {
      problems.push_back("input manifest " + cfg.input.string() + " does not exist");
    } else {
      check(problems, "input", [&] {
        vp.panel = load_panel_manifest(cfg.input);
        have_panel = true;
      });
    }
  }
  const TimeSeriesPanel* panel = have_panel ? &vp.panel : nullptr;
  if (panel) {
    std::set<std::string> ids;
    for (const auto& s : panel->subjects) {
      if (!safe_name(s.id))
        problems.push_back("subject id '" + s.id + "' must use only letters, digits, '_', '-', '.'");
      if (!ids.insert(s.id).second) problems.push_back("subject id '" + s.id + "' is repeated");
    }
  }

  if (doc.contains("seed")) {
    if (doc["seed"].is_number_unsigned())
      cfg.seed = doc["seed"].get<std::uint64_t>();
    else
      problems.push_back("seed must be a non-negative integer");
  }
  cfg.output = doc.contains("output") && doc["output"].is_string()
                   ? fs::path(doc["output"].get<std::string>())
                   : fs::path("fcnet-out");

  Json estimator_json, threshold_json;
  cfg.estimator = parse_estimator(doc.value("estimator", Json()), problems, estimator_json);
  cfg.threshold = parse_threshold(doc.value("threshold", Json()), problems, threshold_json);
  if (cfg.threshold.strategy == ThresholdStrategy::Significance &&
      !is_correlation_family(cfg.estimator.measure))
    problems.push_back("significance thresholds need a correlation or partial correlation estimator");
  if (panel) {
    if (cfg.estimator.measure == Measure::Coherence)
      check(problems, "estimator.band",
            [&] { cfg.estimator.coherence.band.validate(panel->sampling_interval); });
    if (cfg.estimator.measure == Measure::Synchronization)
      for (const auto& s : panel->subjects)
        check(problems, "estimator (subject '" + s.id + "')",
              [&] { cfg.estimator.embedding.validate(s.data.cols()); });
  }

  Json bandpass_json;
  if (doc.contains("bandpass")) {
    bandpass_json = merge_params({{"low_hz", 0.01}, {"high_hz", 0.1}}, doc["bandpass"], "bandpass",
                                 problems);
    BandSpec band{bandpass_json["low_hz"].get<double>(), bandpass_json["high_hz"].get<double>()};
    if (panel) check(problems, "bandpass", [&] { band.validate(panel->sampling_interval); });
    cfg.bandpass = band;
  }

  Json analyses_json = Json::array();
  if (doc.contains("analyses") && !doc["analyses"].is_array()) {
    problems.push_back("analyses must be an array");
  } else if (doc.contains("analyses")) {
    std::set<std::string> names;
    for (const auto& entry : doc["analyses"]) {
      if (!entry.is_object() || !entry.contains("type") || !entry["type"].is_string()) {
        problems.push_back("every analysis needs a string 'type'");
        continue;
      }
      AnalysisConfig a;
      a.type = entry["type"].get<std::string>();
      const auto& types = analysis_types();
      if (std::find(types.begin(), types.end(), a.type) == types.end()) {
        problems.push_back("unknown analysis type '" + a.type + "' (known: " + join(types, ", ") +
                           ")");
        continue;
      }
      a.name = entry.contains("name") && entry["name"].is_string()
                   ? entry["name"].get<std::string>()
                   : a.type;
      if (!safe_name(a.name) || a.name == "networks" || a.name == "provenance")
        problems.push_back("analysis name '" + a.name + "' is not a usable report name");
      if (!names.insert(a.name).second)
        problems.push_back("analysis name '" + a.name + "' is used twice; set distinct names");
      Json given = entry;
      given.erase("type");
      given.erase("name");
      const std::size_t before = problems.size();
      a.params = merge_params(analysis_defaults(a.type), given, "analysis '" + a.name + "'",
                              problems);
      if (a.type == "twopart")
        a.params["omega"] = merge_params(omega_defaults(), a.params["omega"],
                                         "analysis '" + a.name + "'.omega", problems);
      if (problems.size() == before) validate_analysis(a, cfg, panel, problems);
      analyses_json.push_back({{"type", a.type}, {"name", a.name}, {"params", a.params}});
      cfg.analyses.push_back(std::move(a));
    }
  }

  if (!problems.empty()) throw ConfigError(problems);

  cfg.resolved = Json::object();
  cfg.resolved["input"] = doc["input"];
  if (cfg.bandpass) cfg.resolved["bandpass"] = bandpass_json;
  cfg.resolved["estimator"] = estimator_json;
  cfg.resolved["threshold"] = threshold_json;
  cfg.resolved["seed"] = cfg.seed;
  cfg.resolved["analyses"] = analyses_json;
  return vp;
}

namespace {

struct RunContext {
  const PipelineConfig& cfg;
  const TimeSeriesPanel& panel;
  const std::vector<ConnectionMatrix>& matrices;
  const std::vector<BinaryNetwork>& networks;
  EstimatorSpec estimator;
};

Json subject_error(const std::string& id, const std::exception& e) {
  Json out{{"subject", id}};
  out.update(error_json(e));
  return out;
}

Json run_metrics(const RunContext& ctx, const Json& p, std::uint64_t seed) {
  Json results = Json::array();
  for (std::size_t s = 0; s < ctx.networks.size(); ++s) {
    const auto& g = ctx.networks[s];
    Json values = Json::object(), undefined = Json::object(), centrality = Json::object();
    for (const auto& m : p["metrics"]) {
      const auto name = m.get<std::string>();
      try {
        values[name] = network_metric(g, name, derive_seed(seed, s));
      } catch (const UndefinedMetric& e) {
        values[name] = nullptr;
        undefined[name] = e.what();
      }
    }
    for (const auto& c : p["centrality"]) {
      const auto kind = parse_centrality_kind(c.get<std::string>());
      try {
        centrality[c.get<std::string>()] = to_json(fcnet::centrality(g, kind))["per_node"];
      } catch (const UndefinedMetric& e) {
        centrality[c.get<std::string>()] = nullptr;
        undefined[c.get<std::string>()] = e.what();
      }
    }
    Json item{{"subject", ctx.panel.subjects[s].id}, {"values", values}};
    if (!centrality.empty()) item["centrality"] = centrality;
    if (!undefined.empty()) item["undefined"] = undefined;
    results.push_back(item);
  }
  return results;
}

Json run_smallworld(const RunContext& ctx, const Json& p, std::uint64_t seed) {
  Json results = Json::array();
  for (std::size_t s = 0; s < ctx.networks.size(); ++s) {
    const auto& id = ctx.panel.subjects[s].id;
    SmallWorldOptions opts;
    opts.null_count = p["null_count"].get<int>();
    opts.swaps_per_edge = p["swaps_per_edge"].get<int>();
    opts.clustering = parse_clustering_variant(p["clustering"].get<std::string>());
    opts.seed = derive_seed(seed, s);
    try {
      Json item{{"subject", id}};
      item.update(to_json(small_world(ctx.networks[s], opts)));
      results.push_back(item);
    } catch (const Error& e) {
      results.push_back(subject_error(id, e));
    }
  }
  return results;
}

Json run_community(const RunContext& ctx, const Json& p, std::uint64_t seed,
                   const fs::path& dir) {
  Json results = Json::array();
  const auto method = p["method"].get<std::string>();
  for (std::size_t s = 0; s < ctx.networks.size(); ++s) {
    const auto& id = ctx.panel.subjects[s].id;
    const auto& g = ctx.networks[s];
    try {
      Json item{{"subject", id}, {"method", method}};
      Partition best;
      if (method == "louvain") {
        const auto runs = louvain_runs(g, p["runs"].get<int>(), derive_seed(seed, s));
        best = runs.runs[runs.best];
        const auto k = runs.agreement.rows();
        item["best_run"] = runs.best;
        item["mean_agreement"] =
            k > 1 ? (runs.agreement.sum() - runs.agreement.trace()) / double(k * (k - 1)) : 1.0;
      } else {
        const auto gn = girvan_newman(g, p["max_communities"].get<int>());
        best = gn.best;
        item["removed_edges"] = edges_json(gn.removed);
      }
      item["partition"] = to_json(best);
      save_partition_csv(dir / (id + "_partition.csv"), best.assignment);
      if (p["roles"].get<bool>()) {
        const auto roles = cartography(g, best.assignment);
        item["roles"] = to_json(roles);
        save_roles_csv(dir / (id + "_roles.csv"), roles);
      }
      results.push_back(item);
    } catch (const Error& e) {
      results.push_back(subject_error(id, e));
    }
  }
  return results;
}

Json run_compare(const RunContext& ctx, const Json& p, std::uint64_t seed) {
  const auto pick = [&](const std::string& group) {
    std::vector<ConnectionMatrix> out;
    Json ids = Json::array();
    for (auto s : group_members(ctx.panel, group)) {
      out.push_back(ctx.matrices[s]);
      ids.push_back(ctx.panel.subjects[s].id);
    }
    return std::pair{out, ids};
  };
  const auto [a, ids_a] = pick(p["group_a"].get<std::string>());
  const auto [b, ids_b] = pick(p["group_b"].get<std::string>());
  const auto method = p["method"].get<std::string>();
  const Tail tail = parse_tail(p["tail"].get<std::string>());
  Json out{{"subjects_a", ids_a}, {"subjects_b", ids_b}};
  if (method == "edgewise") {
    out.update(to_json(
        edgewise_compare(a, b, parse_correction(p["correction"].get<std::string>()), tail)));
    return out;
  }
  ComponentOptions opts;
  opts.t_threshold = p["t_threshold"].get<double>();
  opts.permutations = p["permutations"].get<int>();
  opts.seed = seed;
  opts.tail = tail;
  if (method == "nbs") {
    out.update(to_json(nbs(a, b, opts)));
  } else {
    const auto adjacency =
        NodeAdjacency::from_coordinates(*ctx.panel.coordinates, p["radius"].get<double>());
    out.update(to_json(spc(a, b, adjacency, opts)));
  }
  return out;
}

Json run_ergm(const RunContext& ctx, const Json& p, std::uint64_t seed, const fs::path& dir,
              const std::string& name) {
  ErgmSpec spec;
  spec.terms.clear();
  for (const auto& t : p["terms"]) spec.terms.push_back(parse_ergm_term(t.get<std::string>()));
  Json fits = Json::array();
  for (std::size_t s = 0; s < ctx.networks.size(); ++s) {
    const auto& id = ctx.panel.subjects[s].id;
    try {
      Json item{{"subject", id}};
      item.update(to_json(ergm_mple(ctx.networks[s], spec)));
      fits.push_back(item);
    } catch (const Error& e) {
      fits.push_back(subject_error(id, e));
    }
  }
  Json out{{"fits", fits}};
  if (p["representative"].get<bool>()) {
    RepresentativeOptions opts;
    opts.ensemble = p["ensemble"].get<int>();
    const auto rep = representative_network(ctx.networks, spec, seed, opts);
    out["representative"] = to_json(rep, spec);
    save_network(dir / (name + "_representative.tsv"), rep.network);
  }
  return out;
}

Json run_twopart(const RunContext& ctx, const Json& p, const fs::path& dir,
                 const std::string& name) {
  DatasetCovariates cov;
  const auto subjects = ctx.panel.subjects.size();
  for (const auto& c : p["subject_covariates"]) {
    const auto key = c.get<std::string>();
    Eigen::VectorXd v(static_cast<Eigen::Index>(subjects));
    for (std::size_t s = 0; s < subjects; ++s)
      v[static_cast<Eigen::Index>(s)] = ctx.panel.subjects[s].covariates.at(key);
    cov.subject.emplace_back(key, v);
  }
  for (const auto& c : p["dyad_covariates"]) {
    const auto& xyz = *ctx.panel.coordinates;
    Eigen::MatrixXd d(xyz.cols(), xyz.cols());
    for (Eigen::Index i = 0; i < xyz.cols(); ++i)
      for (Eigen::Index j = 0; j < xyz.cols(); ++j) d(i, j) = (xyz.col(i) - xyz.col(j)).norm();
    cov.dyad.emplace_back(c.get<std::string>(), d);
  }
  TwoPartModel model;
  model.presence_terms = p["presence_terms"].get<std::vector<std::string>>();
  model.strength_terms = p["strength_terms"].get<std::vector<std::string>>();
  std::set<std::pair<std::string, std::string>> interactions;
  for (const auto* terms : {&model.presence_terms, &model.strength_terms})
    for (const auto& t : *terms)
      if (const auto colon = t.find(':'); colon != std::string::npos)
        interactions.emplace(t.substr(0, colon), t.substr(colon + 1));
  cov.interactions.assign(interactions.begin(), interactions.end());
  model.omega = parse_omega(p["omega"]);
  model.quadrature_points = p["quadrature_points"].get<int>();
  model.max_evaluations = p["max_evaluations"].get<int>();

  DyadDataset data =
      build_dyad_dataset(ctx.matrices, cov, p["presence_threshold"].get<double>());
  data.coordinates = ctx.panel.coordinates;
  save_dyad_dataset(dir / (name + "_dyads.csv"), data);
  const auto fit = twopart_fit(data, model);
  long present = 0;
  for (char c : data.presence) present += c;
  Json out{{"rows", data.rows()}, {"present", present}};
  out.update(to_json(fit));
  return out;
}

Json run_bootstrap(const RunContext& ctx, const Json& p, std::uint64_t seed) {
  const NetworkPipeline pipeline{ctx.estimator, ctx.cfg.threshold};
  MetricErrorOptions opts;
  opts.block_length = p["block_length"].get<int>();
  opts.level = p["level"].get<double>();
  Json results = Json::array();
  for (std::size_t s = 0; s < ctx.panel.subjects.size(); ++s) {
    const auto& subject = ctx.panel.subjects[s];
    try {
      Json item{{"subject", subject.id}};
      item.update(to_json(metric_error(subject.data, pipeline, p["metric"].get<std::string>(),
                                       p["replicates"].get<int>(), derive_seed(seed, s), opts)));
      results.push_back(item);
    } catch (const Error& e) {
      results.push_back(subject_error(subject.id, e));
    }
  }
  return results;
}

/// Scalar fields of a per-subject item; "values" entries become columns and
/// two-element intervals become _lower/_upper pairs.
Json flat_row(const Json& item) {
  Json row = Json::object();
  for (const auto& [key, value] : item.items()) {
    if (value.is_primitive()) {
      row[key] = value;
    } else if (key == "values") {
      for (const auto& [metric, v] : value.items()) row[metric] = v;
    } else if (key == "error") {
      row["error"] = value["message"];
    } else if (value.is_array() && value.size() == 2 && value[0].is_number() &&
               key.ends_with("_ci")) {
      row[key + "_lower"] = value[0];
      row[key + "_upper"] = value[1];
    }
  }
  return row;
}

/// One CSV-ready table per report; empty when the analysis has no table.
Json table_rows(const std::string& type, const Json& results) {
  Json rows = Json::array();
  if (type == "metrics" || type == "smallworld" || type == "bootstrap") {
    for (const auto& item : results) rows.push_back(flat_row(item));
  } else if (type == "community") {
    for (const auto& item : results) {
      Json row = flat_row(item);
      if (item.contains("partition"))
        for (const auto& [key, value] : item["partition"].items())
          if (value.is_primitive()) row[key] = value;
      rows.push_back(row);
    }
  } else if (type == "compare") {
    if (results.contains("clusters")) {
      for (std::size_t c = 0; c < results["clusters"].size(); ++c) {
        const auto& cl = results["clusters"][c];
        rows.push_back({{"cluster", c}, {"size", cl["size"]}, {"p_fwe", cl["p_fwe"]}});
      }
    } else {
      for (const auto& e : results["edges"]) rows.push_back(e);
    }
  } else if (type == "ergm") {
    for (const auto& fit : results["fits"]) {
      if (fit.contains("error")) {
        rows.push_back(flat_row(fit));
        continue;
      }
      for (std::size_t k = 0; k < fit["terms"].size(); ++k)
        rows.push_back({{"subject", fit["subject"]},
                        {"term", fit["terms"][k]},
                        {"theta", fit["theta"][k]},
                        {"se", fit["standard_errors"][k]},
                        {"converged", fit["converged"]}});
    }
  } else if (type == "twopart") {
    for (const char* part : {"presence", "strength"})
      for (const auto& c : results[part]["coefficients"])
        rows.push_back({{"part", part}, {"term", c["term"]}, {"estimate", c["estimate"]},
                        {"se", c["se"]}});
  }
  return rows;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json sorted_warnings() {
  auto w = take_warnings();
  std::sort(w.begin(), w.end());
  return w;
}

}  // namespace

std::vector<fs::path> run_pipeline(const ValidatedPipeline& vp) {
  const auto& cfg = vp.config;
  const std::string started = utc_now();
  take_warnings();
  const TimeSeriesPanel panel = cfg.bandpass ? bandpass_filter(vp.panel, *cfg.bandpass) : vp.panel;
  fs::create_directories(cfg.output);

  EstimatorSpec estimator = cfg.estimator;
  estimator.coherence.sampling_interval = panel.sampling_interval;
  const std::size_t count = panel.subjects.size();
  std::vector<ConnectionMatrix> matrices(count);
  std::vector<BinaryNetwork> networks(count);
  parallel_for(count, [&](std::size_t s) {
    const auto& data = panel.subjects[s].data;
    matrices[s] = estimate_connectivity(data, estimator);
    networks[s] = apply_threshold(matrices[s], cfg.threshold, data.cols());
  });

  std::vector<fs::path> reports;
  const Json header{{"config_hash", json_hash(cfg.resolved)},
                    {"estimator", cfg.resolved["estimator"]},
                    {"threshold", cfg.resolved["threshold"]}};
  Json summary = header;
  summary["analysis"] = "networks";
  Json subjects = Json::array();
  for (std::size_t s = 0; s < count; ++s) {
    const auto& id = panel.subjects[s].id;
    save_connection_matrix(cfg.output / "matrices" / (id + ".csv"), matrices[s]);
    save_network(cfg.output / "networks" / (id + ".tsv"), networks[s]);
    subjects.push_back({{"subject", id},
                        {"group", panel.subjects[s].group},
                        {"nodes", networks[s].size()},
                        {"time_points", panel.subjects[s].data.cols()},
                        {"edges", networks[s].edge_count()},
                        {"density", networks[s].density()},
                        {"threshold", to_json(networks[s].provenance)}});
  }
  summary["subjects"] = std::move(subjects);
  summary["warnings"] = sorted_warnings();
  reports.push_back(cfg.output / "networks.json");
  write_json(reports.back(), summary);

  const RunContext ctx{cfg, panel, matrices, networks, estimator};
  Json stage_seeds = Json::object();
  for (const auto& a : cfg.analyses) {
    const std::uint64_t seed = derive_seed(cfg.seed, a.name);
    stage_seeds[a.name] = seed;
    const fs::path dir = cfg.output / a.name;
    Json results;
    if (a.type == "metrics") results = run_metrics(ctx, a.params, seed);
    else if (a.type == "smallworld") results = run_smallworld(ctx, a.params, seed);
    else if (a.type == "community") results = run_community(ctx, a.params, seed, dir);
    else if (a.type == "compare") results = run_compare(ctx, a.params, seed);
    else if (a.type == "ergm") results = run_ergm(ctx, a.params, seed, dir, a.name);
    else if (a.type == "twopart") results = run_twopart(ctx, a.params, dir, a.name);
    else if (a.type == "bootstrap") results = run_bootstrap(ctx, a.params, seed);
    Json report = header;
    report["analysis"] = a.type;
    report["name"] = a.name;
    report["params"] = a.params;
    report["seed"] = seed;
    report["results"] = std::move(results);
    report["warnings"] = sorted_warnings();
    if (const Json rows = table_rows(a.type, report["results"]); !rows.empty())
      save_table_csv(cfg.output / (a.name + ".csv"), rows);
    reports.push_back(cfg.output / (a.name + ".json"));
    write_json(reports.back(), report);
  }

  Json provenance;
  provenance["config_hash"] = json_hash(cfg.resolved);
  provenance["version"] = FCNET_VERSION;
  provenance["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                        std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION);
  provenance["seed"] = cfg.seed;
  provenance["stage_seeds"] = stage_seeds;
  provenance["input"] = fs::absolute(cfg.input).lexically_normal().string();
  provenance["output"] = fs::absolute(cfg.output).lexically_normal().string();
  provenance["workers"] = worker_count();
  provenance["started_at"] = started;
  provenance["finished_at"] = utc_now();
  provenance["config"] = cfg.resolved;
  Json names = Json::array();
  for (const auto& r : reports) names.push_back(r.filename().string());
  provenance["reports"] = names;
  write_json(cfg.output / "provenance.json", provenance);
  return reports;
}

}  // namespace fcnet
