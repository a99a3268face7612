// Command-line front end. Exit codes: 0 success, 1 computation failure
// (a JSON error object is printed), 2 usage or validation failure.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "fcnet/community.hpp"
#include "fcnet/diagnostics.hpp"
#include "fcnet/ergm.hpp"
#include "fcnet/errorprop.hpp"
#include "fcnet/graph.hpp"
#include "fcnet/groupstat.hpp"
#include "fcnet/io.hpp"
#include "fcnet/mixedmodel.hpp"
#include "fcnet/nullmodel.hpp"
#include "fcnet/parallel.hpp"
#include "fcnet/pipeline.hpp"

namespace fs = std::filesystem;
using namespace fcnet;

namespace {

constexpr int kComputationFailure = 1;
constexpr int kUsageFailure = 2;

struct Common {
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "json";
  int workers = 0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Seed for every stochastic step");
  sub->add_option("--out", c.out, "Output path");
  sub->add_option("--format", c.format, "Report format on stdout or --out")
      ->check(CLI::IsMember({"json", "csv"}));
  sub->add_option("--workers", c.workers, "Worker threads (default: $FCNET_WORKERS or all cores)")
      ->check(CLI::NonNegativeNumber);
}

struct EstimatorFlags {
  std::string measure = "correlation";
  double shrinkage = 0.0;
  int bins = 0;
  bool normalize = false;
  double band_low = 0.01;
  double band_high = 0.1;
  int segments = 8;
  int lag = 2;
  int dimension = 3;
  int neighbors = 5;

  void add(CLI::App* sub) {
    sub->add_option("--measure", measure, "correlation, partial_correlation, coherence, "
                                          "mutual_information or synchronization");
    sub->add_option("--shrinkage", shrinkage, "Partial correlation shrinkage in [0, 1]");
    sub->add_option("--bins", bins, "Mutual information bins (0: ceil(sqrt(T/5)))");
    sub->add_flag("--normalize", normalize, "Normalized mutual information");
    sub->add_option("--band-low", band_low, "Coherence band lower edge (Hz)");
    sub->add_option("--band-high", band_high, "Coherence band upper edge (Hz)");
    sub->add_option("--segments", segments, "Coherence Welch segments");
    sub->add_option("--lag", lag, "Synchronization embedding lag");
    sub->add_option("--dimension", dimension, "Synchronization embedding dimension");
    sub->add_option("--neighbors", neighbors, "Synchronization neighbour count");
  }

  EstimatorSpec spec(double tr) const {
    EstimatorSpec s;
    s.measure = parse_measure(measure);
    s.shrinkage = shrinkage;
    s.mi_bins = bins;
    s.mi_normalize = normalize;
    s.coherence.band = {band_low, band_high};
    s.coherence.segment_count = segments;
    s.coherence.sampling_interval = tr;
    s.embedding = {lag, dimension, neighbors};
    return s;
  }
};

struct ThresholdFlags {
  std::string strategy = "significance";
  double tau = 0.0;
  double alpha = 0.05;
  std::string correction = "bonferroni";
  double k = 4.0;
  double density = 0.1;
  double exponent = 2.5;
  std::string negative = "drop";

  void add(CLI::App* sub) {
    sub->add_option("--strategy", strategy, "value, significance, min_connected, fixed_degree, "
                                            "fixed_density or path_exponent");
    sub->add_option("--tau", tau, "Value threshold");
    sub->add_option("--alpha", alpha, "Significance level");
    sub->add_option("--correction", correction, "none, bonferroni or bh-fdr");
    sub->add_option("--k", k, "Target mean degree");
    sub->add_option("--density", density, "Target edge density");
    sub->add_option("--exponent", exponent, "Path-length exponent S (k = n^(1/S))");
    sub->add_option("--negative", negative, "drop or absolute");
  }

  ThresholdSpec spec() const {
    ThresholdSpec s;
    s.strategy = parse_threshold_strategy(strategy);
    s.tau = tau;
    s.alpha = alpha;
    s.correction = parse_correction(correction);
    s.k = k;
    s.density = density;
    s.exponent = exponent;
    s.negative = parse_negative_policy(negative);
    return s;
  }
};

/// Writes the report to --out or stdout.
void emit(const Common& c, const Json& report, const std::string& csv = {}) {
  std::string text;
  if (c.format == "csv") {
    if (csv.empty()) throw ValidationError("this command has no CSV output; use --format json");
    text = csv;
  } else {
    text = report.dump(2) + "\n";
  }
  if (c.out.empty()) {
    std::cout << text;
  } else {
    const fs::path path(c.out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + c.out);
    f << text;
  }
}

std::string csv_number(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

Eigen::Matrix3Xd load_coordinates(const std::string& path) {
  const auto table = read_numeric_csv(path);
  if (table.values.cols() != 3) throw ShapeError(path + ": coordinates need 3 columns");
  return table.values.transpose();
}

TimeSeriesPanel load_series(const std::string& path, const std::string& layout, double tr) {
  if (fs::path(path).extension() == ".json") return load_panel_manifest(path);
  return load_timeseries(path, parse_layout(layout), tr);
}

Json metric_json(const BinaryNetwork& g, const std::optional<WeightedNetwork>& w,
                 const std::string& name, std::uint64_t seed) {
  const auto centralities = {"degree", "betweenness", "closeness", "eigenvector"};
  for (const char* c : centralities)
    if (name == c)
      return to_json(w ? centrality(*w, parse_centrality_kind(name))
                       : centrality(g, parse_centrality_kind(name)));
  if (name == "global_efficiency") return to_json(w ? global_efficiency(*w) : global_efficiency(g));
  if (name == "local_efficiency") return to_json(w ? local_efficiency(*w) : local_efficiency(g));
  if (name == "path_length") return to_json(w ? path_length(*w) : path_length(g));
  if (name == "clustering")
    return to_json(w ? clustering(*w, ClusteringVariant::WeightedGeometric)
                     : clustering(g, ClusteringVariant::MeanLocal));
  if (name == "transitivity") return to_json(clustering(g, ClusteringVariant::Transitivity));
  if (name == "assortativity") return to_json(assortativity(g));
  MetricReport r;
  r.metric = name;
  r.value = network_metric(g, name, seed);
  return to_json(r);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Functional connectivity network analysis"};
  app.require_subcommand(1);
  Common common;
  std::function<void()> action;

  // estimate
  auto* est = app.add_subcommand("estimate", "Connection matrix from time series");
  std::string est_in, est_layout = "rows-are-time";
  double est_tr = 1.0;
  EstimatorFlags est_flags;
  est->add_option("--in", est_in, "Time-series CSV or panel manifest (.json)")->required()
      ->check(CLI::ExistingFile);
  est->add_option("--layout", est_layout, "rows-are-time or rows-are-nodes");
  est->add_option("--tr", est_tr, "Seconds per sample");
  est_flags.add(est);
  add_common(est, common);
  est->callback([&] {
    action = [&] {
      if (common.out.empty()) throw ValidationError("estimate needs --out");
      const auto panel = load_series(est_in, est_layout, est_tr);
      const auto spec = est_flags.spec(panel.sampling_interval);
      Json written = Json::array();
      const bool many = panel.subjects.size() > 1;
      for (const auto& s : panel.subjects) {
        const fs::path target = many ? fs::path(common.out) / (s.id + ".csv") : fs::path(common.out);
        save_connection_matrix(target, estimate_connectivity(s.data, spec));
        written.push_back(target.string());
      }
      std::cout << Json{{"measure", to_string(spec.measure)},
                        {"nodes", panel.node_count},
                        {"written", written}}
                       .dump(2)
                << "\n";
    };
  });

  // threshold
  auto* thr = app.add_subcommand("threshold", "Binary or weighted network from a matrix");
  std::string thr_in, thr_weighted;
  long thr_length = 0;
  ThresholdFlags thr_flags;
  thr->add_option("--in", thr_in, "Connection matrix CSV")->required()->check(CLI::ExistingFile);
  thr->add_option("--T", thr_length, "Series length for the significance test");
  thr->add_option("--weighted", thr_weighted,
                  "Write weights instead: keep_positive, absolute or threshold_then_keep");
  thr_flags.add(thr);
  add_common(thr, common);
  thr->callback([&] {
    action = [&] {
      if (common.out.empty()) throw ValidationError("threshold needs --out");
      const auto cm = load_connection_matrix(thr_in);
      Json summary{{"nodes", cm.size()}, {"output", common.out}};
      if (!thr_weighted.empty()) {
        const std::map<std::string, WeightPolicy> policies{
            {"keep_positive", WeightPolicy::KeepPositive},
            {"absolute", WeightPolicy::Absolute},
            {"threshold_then_keep", WeightPolicy::ThresholdThenKeep}};
        if (!policies.count(thr_weighted))
          throw ValidationError("unknown weight policy '" + thr_weighted + "'");
        const auto w = weighted_network(cm, policies.at(thr_weighted), thr_flags.tau);
        save_network(common.out, w);
        summary["edges"] = w.edge_count();
        summary["weighted"] = true;
      } else {
        const auto spec = thr_flags.spec();
        if (spec.strategy == ThresholdStrategy::Significance && thr_length <= 3)
          throw ValidationError("the significance strategy needs --T > 3");
        const auto g = apply_threshold(cm, spec, thr_length);
        save_network(common.out, g);
        summary["edges"] = g.edge_count();
        summary["density"] = g.density();
        summary["threshold"] = to_json(g.provenance);
      }
      std::cout << summary.dump(2) << "\n";
    };
  });

  // metrics
  auto* met = app.add_subcommand("metrics", "Graph metrics of a network");
  std::string met_in;
  std::vector<std::string> met_names;
  bool met_weighted = false;
  met->add_option("--in", met_in, "Edge-list TSV")->required()->check(CLI::ExistingFile);
  met->add_option("--metric", met_names, "Metric name (repeatable)")->required();
  met->add_flag("--weighted", met_weighted, "Use edge weights where the metric has a weighted form");
  add_common(met, common);
  met->callback([&] {
    action = [&] {
      const auto file = load_network(met_in);
      const auto g = file.binary();
      std::optional<WeightedNetwork> w;
      if (met_weighted) w = file.weighted_network();
      Json reports = Json::array();
      std::string csv = "metric,value\n";
      for (const auto& name : met_names) {
        reports.push_back(metric_json(g, w, name, common.seed));
        const auto& value = reports.back().value("value", Json());
        csv += name + "," + (value.is_number() ? csv_number(value.get<double>()) : "") + "\n";
      }
      emit(common, Json{{"input", met_in}, {"weighted", met_weighted}, {"metrics", reports}}, csv);
    };
  });

  // smallworld
  auto* sw = app.add_subcommand("smallworld", "Small-world indices and degree power law");
  std::string sw_in, sw_clustering = "mean_local";
  int sw_nulls = 20, sw_swaps = 10, sw_gof = 100, sw_min_tail = 50;
  bool sw_powerlaw = false;
  sw->add_option("--in", sw_in, "Edge-list TSV")->required()->check(CLI::ExistingFile);
  sw->add_option("--nulls", sw_nulls, "Null networks per reference");
  sw->add_option("--swaps", sw_swaps, "Rewiring swaps per edge");
  sw->add_option("--clustering", sw_clustering, "mean_local or transitivity");
  sw->add_flag("--powerlaw", sw_powerlaw, "Also fit a power law to the degree sequence");
  sw->add_option("--gof-reps", sw_gof, "Power-law goodness-of-fit bootstrap replicates");
  sw->add_option("--min-tail", sw_min_tail, "Minimum power-law tail size");
  add_common(sw, common);
  sw->callback([&] {
    action = [&] {
      const auto g = load_network(sw_in).binary();
      SmallWorldOptions opts;
      opts.null_count = sw_nulls;
      opts.swaps_per_edge = sw_swaps;
      opts.seed = derive_seed(common.seed, "smallworld");
      opts.clustering = parse_clustering_variant(sw_clustering);
      Json report{{"input", sw_in}, {"small_world", to_json(small_world(g, opts))}};
      if (sw_powerlaw) {
        PowerLawOptions p;
        p.bootstrap_reps = sw_gof;
        p.min_tail = sw_min_tail;
        p.seed = derive_seed(common.seed, "powerlaw");
        report["powerlaw"] = to_json(powerlaw_fit(degree_sequence(g), p));
      }
      report["warnings"] = take_warnings();
      emit(common, report);
    };
  });

  // community
  auto* com = app.add_subcommand("community", "Community detection and node roles");
  std::string com_in, com_method = "louvain", com_partition_csv, com_roles_csv;
  int com_runs = 10, com_max = 0;
  com->add_option("--in", com_in, "Edge-list TSV")->required()->check(CLI::ExistingFile);
  com->add_option("--method", com_method, "louvain or girvan_newman")
      ->check(CLI::IsMember({"louvain", "girvan_newman"}));
  com->add_option("--runs", com_runs, "Independent Louvain runs");
  com->add_option("--max-communities", com_max, "Girvan-Newman community cap (0: none)");
  com->add_option("--partition-csv", com_partition_csv, "Also write node,community CSV");
  com->add_option("--roles-csv", com_roles_csv, "Also write node,z,participation,role CSV");
  add_common(com, common);
  com->callback([&] {
    action = [&] {
      const auto g = load_network(com_in).binary();
      Json report{{"input", com_in}, {"method", com_method}};
      Partition best;
      if (com_method == "louvain") {
        const auto runs = louvain_runs(g, com_runs, derive_seed(common.seed, "community"));
        best = runs.runs[runs.best];
        report["runs"] = com_runs;
        report["best_run"] = runs.best;
      } else {
        const auto gn = girvan_newman(g, com_max);
        best = gn.best;
        report["removed_edges"] = edges_json(gn.removed);
      }
      const auto roles = cartography(g, best.assignment);
      report["partition"] = to_json(best);
      report["roles"] = to_json(roles);
      if (!com_partition_csv.empty()) save_partition_csv(com_partition_csv, best.assignment);
      if (!com_roles_csv.empty()) save_roles_csv(com_roles_csv, roles);
      std::string csv = "node,community\n";
      for (std::size_t v = 0; v < best.assignment.size(); ++v)
        csv += std::to_string(v) + "," + std::to_string(best.assignment[v]) + "\n";
      emit(common, report, csv);
    };
  });

  // compare
  auto* cmp = app.add_subcommand("compare", "Two-group comparison of connection matrices");
  std::vector<std::string> cmp_a, cmp_b;
  std::string cmp_method = "nbs", cmp_tail = "two-sided", cmp_correction = "bh-fdr", cmp_coords;
  double cmp_t = 3.0, cmp_radius = 0.0;
  int cmp_perms = 1000;
  cmp->add_option("--a", cmp_a, "Group A matrices")->required()->check(CLI::ExistingFile);
  cmp->add_option("--b", cmp_b, "Group B matrices")->required()->check(CLI::ExistingFile);
  cmp->add_option("--method", cmp_method, "edgewise, nbs or spc")
      ->check(CLI::IsMember({"edgewise", "nbs", "spc"}));
  cmp->add_option("--t-threshold", cmp_t, "Primary t threshold (nbs, spc)");
  cmp->add_option("--permutations", cmp_perms, "Label permutations (nbs, spc)");
  cmp->add_option("--tail", cmp_tail, "two-sided, greater or less");
  cmp->add_option("--correction", cmp_correction, "Edgewise correction: none, bonferroni, bh-fdr");
  cmp->add_option("--coordinates", cmp_coords, "n x 3 node coordinates CSV (spc)");
  cmp->add_option("--radius", cmp_radius, "Spatial adjacency radius (spc)");
  add_common(cmp, common);
  cmp->callback([&] {
    action = [&] {
      if (cmp_method == "spc" && (cmp_coords.empty() || !(cmp_radius > 0)))
        throw ValidationError("spc requires --coordinates and a positive --radius");
      std::vector<ConnectionMatrix> a, b;
      for (const auto& p : cmp_a) a.push_back(load_connection_matrix(p));
      for (const auto& p : cmp_b) b.push_back(load_connection_matrix(p));
      const Tail tail = parse_tail(cmp_tail);
      Json report;
      std::string csv;
      if (cmp_method == "edgewise") {
        const auto r = edgewise_compare(a, b, parse_correction(cmp_correction), tail);
        report = to_json(r);
        csv = "i,j,t,p,q\n";
        for (std::size_t k = 0; k < r.edges.size(); ++k) {
          const auto e = static_cast<Eigen::Index>(k);
          csv += std::to_string(r.edges[k].i) + "," + std::to_string(r.edges[k].j) + "," +
                 csv_number(r.t[e]) + "," + csv_number(r.p[e]) + "," + csv_number(r.q[e]) + "\n";
        }
      } else {
        ComponentOptions opts;
        opts.t_threshold = cmp_t;
        opts.permutations = cmp_perms;
        opts.seed = derive_seed(common.seed, "compare");
        opts.tail = tail;
        const auto r = cmp_method == "nbs"
                           ? nbs(a, b, opts)
                           : spc(a, b, NodeAdjacency::from_coordinates(load_coordinates(cmp_coords),
                                                                       cmp_radius),
                                 opts);
        report = to_json(r);
        csv = "cluster,size,p_fwe,i,j\n";
        for (std::size_t c = 0; c < r.clusters.size(); ++c)
          for (const auto& e : r.clusters[c].edges)
            csv += std::to_string(c) + "," + std::to_string(r.clusters[c].size) + "," +
                   csv_number(r.clusters[c].p_fwe) + "," + std::to_string(e.i) + "," +
                   std::to_string(e.j) + "\n";
      }
      report["group_a"] = cmp_a;
      report["group_b"] = cmp_b;
      emit(common, report, csv);
    };
  });

  // ergm
  auto* erg = app.add_subcommand("ergm", "ERGM pseudo-likelihood fit and simulation");
  std::vector<std::string> erg_in, erg_terms{"edges"};
  int erg_simulate = 0, erg_ensemble = 100;
  bool erg_representative = false;
  erg->add_option("--in", erg_in, "Edge-list TSV (several with --representative)")->required()
      ->check(CLI::ExistingFile);
  erg->add_option("--terms", erg_terms, "Model terms: edges, two_stars, triangles")->delimiter(',');
  erg->add_option("--simulate", erg_simulate, "Networks to simulate at the fitted theta");
  erg->add_flag("--representative", erg_representative, "Group representative network");
  erg->add_option("--ensemble", erg_ensemble, "Simulated ensemble size (representative)");
  add_common(erg, common);
  erg->callback([&] {
    action = [&] {
      ErgmSpec spec;
      spec.terms.clear();
      for (const auto& t : erg_terms) spec.terms.push_back(parse_ergm_term(t));
      spec.validate();
      std::vector<BinaryNetwork> group;
      for (const auto& p : erg_in) group.push_back(load_network(p).binary());
      Json report{{"input", erg_in}};
      if (erg_representative) {
        RepresentativeOptions opts;
        opts.ensemble = erg_ensemble;
        report["representative"] =
            to_json(representative_network(group, spec, derive_seed(common.seed, "ergm"), opts),
                    spec);
      } else {
        if (group.size() != 1) throw ValidationError("several networks need --representative");
        const auto fit = ergm_mple(group.front(), spec);
        report["fit"] = to_json(fit);
        if (erg_simulate > 0) {
          const auto draws = ergm_simulate({spec, fit.theta}, group.front().size(), erg_simulate,
                                           derive_seed(common.seed, "ergm"));
          Json sims = Json::array();
          for (const auto& d : draws) {
            Json stats = Json::array();
            for (double v : ergm_stats(d, spec)) stats.push_back(v);
            sims.push_back({{"stats", stats}, {"edges", edges_json(d.edges())}});
          }
          report["simulated"] = sims;
        }
      }
      report["warnings"] = take_warnings();
      emit(common, report);
    };
  });

  // twopart
  auto* tp = app.add_subcommand("twopart", "Two-part mixed model of dyad presence and strength");
  std::string tp_in, tp_coords, tp_omega = "identity";
  std::vector<std::string> tp_presence{"intercept"}, tp_strength{"intercept"};
  double tp_rho = 0.5, tp_delta = 1.0, tp_nu = 1.0, tp_phi = 1.0;
  int tp_quadrature = 15, tp_evals = 2000;
  tp->add_option("--in", tp_in, "Dyad dataset CSV")->required()->check(CLI::ExistingFile);
  tp->add_option("--presence", tp_presence, "Presence terms")->delimiter(',');
  tp->add_option("--strength", tp_strength, "Strength terms")->delimiter(',');
  tp->add_option("--omega", tp_omega, "Dyad correlation kind");
  tp->add_option("--rho", tp_rho, "Starting rho");
  tp->add_option("--delta", tp_delta, "Starting LEAR delta");
  tp->add_option("--nu", tp_nu, "Starting damped-exponential nu");
  tp->add_option("--phi", tp_phi, "Starting range phi");
  tp->add_option("--coordinates", tp_coords, "n x 3 node coordinates CSV");
  tp->add_option("--quadrature", tp_quadrature, "Adaptive Gauss-Hermite points");
  tp->add_option("--max-evaluations", tp_evals, "Optimizer evaluation budget per part");
  add_common(tp, common);
  tp->callback([&] {
    action = [&] {
      auto data = load_dyad_dataset(tp_in);
      if (!tp_coords.empty()) data.coordinates = load_coordinates(tp_coords);
      TwoPartModel model;
      model.presence_terms = tp_presence;
      model.strength_terms = tp_strength;
      model.omega.kind = parse_correlation_kind(tp_omega);
      model.omega.rho = tp_rho;
      model.omega.delta = tp_delta;
      model.omega.nu = tp_nu;
      model.omega.phi = tp_phi;
      model.quadrature_points = tp_quadrature;
      model.max_evaluations = tp_evals;
      if (model.omega.kind != CorrelationKind::Identity &&
          model.omega.kind != CorrelationKind::CompoundSymmetry && !data.coordinates)
        throw ValidationError("omega '" + tp_omega + "' requires --coordinates");
      Json report{{"input", tp_in}, {"rows", data.rows()}};
      report.update(to_json(twopart_fit(data, model)));
      report["warnings"] = take_warnings();
      emit(common, report);
    };
  });

  // bootstrap
  auto* bs = app.add_subcommand("bootstrap", "Bootstrap error of a network metric");
  std::string bs_in, bs_layout = "rows-are-time", bs_metric = "density";
  double bs_tr = 1.0, bs_level = 0.95;
  int bs_reps = 200, bs_block = 0;
  EstimatorFlags bs_est;
  ThresholdFlags bs_thr;
  bs->add_option("--in", bs_in, "Time-series CSV")->required()->check(CLI::ExistingFile);
  bs->add_option("--layout", bs_layout, "rows-are-time or rows-are-nodes");
  bs->add_option("--tr", bs_tr, "Seconds per sample");
  bs->add_option("--metric", bs_metric, "Scalar network metric");
  bs->add_option("--replicates", bs_reps, "Bootstrap replicates B");
  bs->add_option("--block-length", bs_block, "Block length (0: ceil(sqrt(T)))");
  bs->add_option("--level", bs_level, "Confidence level");
  bs_est.add(bs);
  bs_thr.add(bs);
  add_common(bs, common);
  bs->callback([&] {
    action = [&] {
      const auto panel = load_timeseries(bs_in, parse_layout(bs_layout), bs_tr);
      const NetworkPipeline pipeline{bs_est.spec(bs_tr), bs_thr.spec()};
      MetricErrorOptions opts;
      opts.block_length = bs_block;
      opts.level = bs_level;
      const auto d = metric_error(panel.subjects.front().data, pipeline, bs_metric, bs_reps,
                                  derive_seed(common.seed, "bootstrap"), opts);
      Json report{{"input", bs_in}};
      report.update(to_json(d));
      report["warnings"] = take_warnings();
      std::string csv = "replicate\n";
      for (double v : d.replicates) csv += csv_number(v) + "\n";
      emit(common, report, csv);
    };
  });

  // pipeline
  auto* pl = app.add_subcommand("pipeline", "Run a configured pipeline");
  std::string pl_config;
  bool pl_validate_only = false;
  pl->add_option("--config", pl_config, "Pipeline config JSON")->required()
      ->check(CLI::ExistingFile);
  pl->add_flag("--validate-only", pl_validate_only, "Check the config and stop");
  add_common(pl, common);
  pl->callback([&] {
    action = [&] {
      Json doc = read_json(pl_config);
      if (pl->count("--seed")) doc["seed"] = common.seed;
      if (!common.out.empty()) doc["output"] = common.out;
      const auto validated = validate_pipeline(doc, fs::path(pl_config).parent_path());
      if (pl_validate_only) {
        std::cout << Json{{"valid", true}, {"config_hash", json_hash(validated.config.resolved)}}
                         .dump(2)
                  << "\n";
        return;
      }
      Json paths = Json::array();
      for (const auto& p : run_pipeline(validated)) paths.push_back(p.string());
      std::cout << Json{{"reports", paths}}.dump(2) << "\n";
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageFailure;
  }

  if (common.workers > 0) set_worker_count(static_cast<std::size_t>(common.workers));
  try {
    action();
    return 0;
  } catch (const ConfigError& e) {
    Json err = error_json(e);
    err["error"]["problems"] = e.problems();
    std::cout << err.dump(2) << "\n";
    return kUsageFailure;
  } catch (const ValidationError& e) {
    std::cout << error_json(e).dump(2) << "\n";
    return kUsageFailure;
  } catch (const ParseError& e) {
    std::cout << error_json(e).dump(2) << "\n";
    return kUsageFailure;
  } catch (const nlohmann::json::exception& e) {
    std::cout << error_json(ValidationError(e.what())).dump(2) << "\n";
    return kUsageFailure;
  } catch (const std::exception& e) {
    std::cout << error_json(e).dump(2) << "\n";
    return kComputationFailure;
  }
}
