#include "fcnet/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fcnet/error.hpp"
#include "fcnet/ingest.hpp"

namespace fcnet {

namespace {

Json vec(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(x);
  return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

std::string term_name(const ErgmSpec& spec, std::size_t k) {
  if (k < spec.terms.size()) return to_string(spec.terms[k]);
  return "covariate_" + std::to_string(k - spec.terms.size());
}

Json term_names(const ErgmSpec& spec) {
  Json out = Json::array();
  for (std::size_t k = 0; k < static_cast<std::size_t>(spec.dimension()); ++k)
    out.push_back(term_name(spec, k));
  return out;
}

}  // namespace

void write_json(const std::filesystem::path& path, const Json& doc) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string json_hash(const Json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  return p.replace_extension(".json");
}

void save_connection_matrix(const std::filesystem::path& csv, const ConnectionMatrix& cm) {
  cm.validate();
  {
    auto out = open_output(csv);
    for (Eigen::Index i = 0; i < cm.size(); ++i) {
      for (Eigen::Index j = 0; j < cm.size(); ++j) out << (j ? "," : "") << cm.values(i, j);
      out << '\n';
    }
  }
  Json meta;
  meta["n"] = cm.size();
  meta["measure"] = to_string(cm.measure);
  meta["params"] = Json::object();
  for (const auto& [k, v] : cm.params) meta["params"][k] = v;
  write_json(sidecar_path(csv), meta);
}

ConnectionMatrix load_connection_matrix(const std::filesystem::path& csv) {
  const auto table = read_numeric_csv(csv);
  ConnectionMatrix cm;
  cm.values = table.values;
  if (std::filesystem::exists(sidecar_path(csv))) {
    const Json meta = read_json(sidecar_path(csv));
    cm.measure = parse_measure(meta.value("measure", std::string("correlation")));
    if (meta.contains("params"))
      for (const auto& [k, v] : meta["params"].items()) cm.params[k] = v.get<double>();
  }
  cm.validate();
  return cm;
}

namespace {

void write_network(const std::filesystem::path& tsv, int n, bool weighted,
                   const std::vector<WeightedEdge>& edges, const Provenance& provenance) {
  Json header;
  header["n"] = n;
  header["weighted"] = weighted;
  header["edges"] = edges.size();
  header["provenance"] = to_json(provenance);
  auto out = open_output(tsv);
  out << "# " << header.dump() << '\n';
  for (const auto& e : edges) {
    out << e.i << '\t' << e.j;
    if (weighted) out << '\t' << e.weight;
    out << '\n';
  }
}

}  // namespace

void save_network(const std::filesystem::path& tsv, const BinaryNetwork& g) {
  std::vector<WeightedEdge> edges;
  for (const auto& e : g.edges()) edges.push_back({e.i, e.j, 1.0});
  write_network(tsv, g.size(), false, edges, g.provenance);
}

void save_network(const std::filesystem::path& tsv, const WeightedNetwork& g) {
  write_network(tsv, g.size(), true, g.edges(), g.provenance);
}

BinaryNetwork NetworkFile::binary() const {
  std::vector<Edge> e;
  for (const auto& w : edges) e.push_back({w.i, w.j});
  BinaryNetwork g(node_count, e);
  g.provenance = provenance;
  return g;
}

WeightedNetwork NetworkFile::weighted_network() const {
  WeightedNetwork g(node_count, edges);
  g.provenance = provenance;
  return g;
}

NetworkFile load_network(const std::filesystem::path& tsv) {
  std::ifstream in(tsv);
  if (!in) throw ValidationError("cannot open " + tsv.string());
  NetworkFile f;
  std::string line;
  long row = 0;
  bool have_header = false;
  int max_node = -1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    if (line[0] == '#') {
      if (have_header) continue;
      Json header;
      try {
        header = Json::parse(line.substr(1));
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(tsv.string() + ": bad header: " + e.what(), row);
      }
      f.node_count = header.value("n", 0);
      f.weighted = header.value("weighted", false);
      if (header.contains("provenance")) {
        const auto& p = header["provenance"];
        f.provenance.strategy = p.value("strategy", std::string());
        if (p.contains("params"))
          for (const auto& [k, v] : p["params"].items()) f.provenance.params[k] = v.get<double>();
      }
      have_header = true;
      continue;
    }
    std::istringstream cells(line);
    WeightedEdge e;
    if (!(cells >> e.i >> e.j)) throw ParseError(tsv.string() + ": bad edge line", row);
    if (f.weighted && !(cells >> e.weight))
      throw ParseError(tsv.string() + ": missing weight", row, 3);
    max_node = std::max({max_node, e.i, e.j});
    f.edges.push_back(e);
  }
  if (!have_header) f.node_count = max_node + 1;
  if (max_node >= f.node_count)
    throw ShapeError(tsv.string() + ": node " + std::to_string(max_node) + " outside n = " +
                     std::to_string(f.node_count));
  return f;
}

void save_partition_csv(const std::filesystem::path& csv, const std::vector<int>& assignment) {
  auto out = open_output(csv);
  out << "node,community\n";
  for (std::size_t v = 0; v < assignment.size(); ++v) out << v << ',' << assignment[v] << '\n';
}

void save_roles_csv(const std::filesystem::path& csv, const std::vector<NodeRole>& roles) {
  auto out = open_output(csv);
  out << "node,z,participation,role\n";
  for (const auto& r : roles)
    out << r.node << ',' << r.within_module_z << ',' << r.participation << ',' << to_string(r.role)
        << '\n';
}

void save_table_csv(const std::filesystem::path& csv, const Json& rows) {
  std::vector<std::string> columns;
  for (const auto& row : rows)
    for (const auto& [key, value] : row.items())
      if (std::find(columns.begin(), columns.end(), key) == columns.end()) columns.push_back(key);
  const auto cell = [](const Json& v) -> std::string {
    if (v.is_null()) return "";
    if (!v.is_string()) return v.dump();
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char ch : s) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return quoted + "\"";
  };
  auto out = open_output(csv);
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < columns.size(); ++c)
      out << (c ? "," : "") << (row.contains(columns[c]) ? cell(row[columns[c]]) : "");
    out << '\n';
  }
}

void save_dyad_dataset(const std::filesystem::path& csv, const DyadDataset& data) {
  data.validate();
  auto out = open_output(csv);
  out << "subject,task,node_j,node_k,presence,strength";
  for (const auto& name : data.covariate_names) out << ',' << name;
  out << '\n';
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    const auto i = static_cast<std::size_t>(r);
    out << data.subject[i] << ',' << data.task[i] << ',' << data.node_j[i] << ',' << data.node_k[i]
        << ',' << int(data.presence[i]) << ',';
    if (data.presence[i])
      out << data.strength[r];
    else
      out << "nan";
    for (Eigen::Index c = 0; c < data.covariates.cols(); ++c) out << ',' << data.covariates(r, c);
    out << '\n';
  }
}

DyadDataset load_dyad_dataset(const std::filesystem::path& csv) {
  const auto table = read_numeric_csv(csv);
  static const std::vector<std::string> fixed{"subject", "task",     "node_j",
                                              "node_k",  "presence", "strength"};
  if (table.header.size() < fixed.size() ||
      !std::equal(fixed.begin(), fixed.end(), table.header.begin()))
    throw ParseError(csv.string() +
                     ": header must start with subject,task,node_j,node_k,presence,strength");
  DyadDataset d;
  const Eigen::Index rows = table.values.rows();
  const auto as_int = [&](Eigen::Index r, int c) {
    const double v = table.values(r, c);
    if (v != std::floor(v)) throw ParseError(csv.string() + ": non-integer id", r + 2, c + 1);
    return static_cast<int>(v);
  };
  d.strength.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    d.subject.push_back(as_int(r, 0));
    d.task.push_back(as_int(r, 1));
    d.node_j.push_back(as_int(r, 2));
    d.node_k.push_back(as_int(r, 3));
    d.presence.push_back(table.values(r, 4) != 0.0 ? 1 : 0);
    d.strength[r] = d.presence.back() ? table.values(r, 5) : std::nan("");
    d.subject_count = std::max(d.subject_count, d.subject.back() + 1);
    d.task_count = std::max(d.task_count, d.task.back() + 1);
    d.node_count = std::max(d.node_count, d.node_k.back() + 1);
  }
  d.covariate_names.assign(table.header.begin() + 6, table.header.end());
  d.covariates = table.values.rightCols(table.values.cols() - 6);
  d.validate();
  return d;
}

Json to_json(const Provenance& p) {
  Json out;
  out["strategy"] = p.strategy;
  out["params"] = Json::object();
  for (const auto& [k, v] : p.params) out["params"][k] = v;
  return out;
}

Json to_json(const MetricReport& r) {
  Json out;
  out["metric"] = r.metric;
  out["value"] = r.value;
  out["unreachable_pairs"] = r.unreachable_pairs;
  if (r.per_node) out["per_node"] = vec(*r.per_node);
  return out;
}

Json to_json(const SmallWorldResult& r) {
  Json out;
  out["sigma"] = r.sigma;
  out["omega"] = r.omega;
  out["clustering"] = r.clustering;
  out["path_length"] = r.path_length;
  out["clustering_random"] = r.clustering_random;
  out["path_length_random"] = r.path_length_random;
  out["clustering_lattice"] = r.clustering_lattice;
  out["null_count"] = r.null_count;
  out["seed"] = r.seed;
  out["largest_component_only"] = r.largest_component_only;
  out["nodes_used"] = r.nodes_used;
  return out;
}

Json to_json(const PowerLawFit& r) {
  Json out;
  out["alpha"] = r.alpha;
  out["x_min"] = r.x_min;
  out["tail_count"] = r.tail_count;
  out["ks_statistic"] = r.ks_statistic;
  out["gof_p"] = r.gof_p;
  out["bootstrap_reps"] = r.bootstrap_reps;
  out["pure_loglik"] = r.pure_loglik;
  out["truncated"] = {{"alpha", r.truncated_alpha},
                      {"lambda", r.truncated_lambda},
                      {"loglik", r.truncated_loglik}};
  return out;
}

Json to_json(const Partition& p) {
  Json out;
  out["community_count"] = p.community_count;
  out["modularity"] = p.modularity;
  out["assignment"] = p.assignment;
  return out;
}

Json to_json(const std::vector<NodeRole>& roles) {
  Json out = Json::array();
  for (const auto& r : roles)
    out.push_back({{"node", r.node},
                   {"z", r.within_module_z},
                   {"participation", r.participation},
                   {"role", to_string(r.role)},
                   {"singleton_community", r.singleton_community}});
  return out;
}

Json edges_json(const std::vector<Edge>& edges) {
  Json out = Json::array();
  for (const auto& e : edges) out.push_back({e.i, e.j});
  return out;
}

Json to_json(const EdgeTestResult& r) {
  Json out;
  out["method"] = "edgewise";
  out["node_count"] = r.node_count;
  out["group_a"] = r.group_a;
  out["group_b"] = r.group_b;
  out["tail"] = to_string(r.tail);
  out["correction"] = to_string(r.correction);
  Json edges = Json::array();
  for (std::size_t k = 0; k < r.edges.size(); ++k) {
    const auto e = static_cast<Eigen::Index>(k);
    edges.push_back({{"i", r.edges[k].i},
                     {"j", r.edges[k].j},
                     {"t", r.t[e]},
                     {"p", r.p[e]},
                     {"q", r.q[e]},
                     {"degenerate", static_cast<bool>(r.degenerate[k])}});
  }
  out["edges"] = std::move(edges);
  return out;
}

Json to_json(const ComponentResult& r) {
  Json out;
  out["method"] = r.method;
  out["t_threshold"] = r.t_threshold;
  out["tail"] = to_string(r.tail);
  out["permutations"] = r.permutations;
  Json clusters = Json::array();
  for (const auto& c : r.clusters)
    clusters.push_back({{"size", c.size}, {"p_fwe", c.p_fwe}, {"edges", edges_json(c.edges)}});
  out["clusters"] = std::move(clusters);
  out["null_max"] = r.null_max;
  return out;
}

Json to_json(const ErgmFit& r) {
  Json out;
  out["terms"] = term_names(r.spec);
  out["theta"] = vec(r.theta);
  out["standard_errors"] = vec(r.standard_errors);
  out["converged"] = r.converged;
  out["iterations"] = r.iterations;
  out["pseudo_loglik"] = r.pseudo_loglik;
  return out;
}

Json to_json(const RepresentativeResult& r, const ErgmSpec& spec) {
  Json out;
  out["terms"] = term_names(spec);
  out["mean_theta"] = vec(r.mean_theta);
  out["target_stats"] = vec(r.target_stats);
  out["network_stats"] = vec(r.network_stats);
  out["failed"] = r.failed;
  out["node_count"] = r.network.size();
  out["edges"] = edges_json(r.network.edges());
  return out;
}

Json to_json(const CorrelationStructure& s) {
  Json out;
  out["kind"] = to_string(s.kind);
  const auto names = s.parameter_names();
  const auto values = s.parameters();
  for (std::size_t k = 0; k < names.size(); ++k) out[names[k]] = values[k];
  if (s.d_min) out["d_min"] = *s.d_min;
  if (s.d_max) out["d_max"] = *s.d_max;
  return out;
}

Json to_json(const TwoPartFit& r) {
  const auto coefficients = [](const std::vector<std::string>& terms, const Eigen::VectorXd& b,
                               const Eigen::VectorXd& se) {
    Json out = Json::array();
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      out.push_back({{"term", terms[k]}, {"estimate", b[i]}, {"se", se[i]}});
    }
    return out;
  };
  Json out;
  out["presence"] = {{"coefficients", coefficients(r.presence_terms, r.beta_v, r.beta_v_se)},
                     {"intercept_variance", r.presence_intercept_variance},
                     {"loglik", r.presence_loglik},
                     {"converged", r.presence_converged}};
  Json omega = to_json(r.omega);
  omega["se"] = r.omega_se;
  Json gamma = Json::array();
  for (Eigen::Index i = 0; i < r.gamma.rows(); ++i) gamma.push_back(vec(r.gamma.row(i)));
  out["strength"] = {{"coefficients", coefficients(r.strength_terms, r.beta_s, r.beta_s_se)},
                     {"intercept_variance", r.strength_intercept_variance},
                     {"residual_variance", vec(r.residual_variance)},
                     {"omega", std::move(omega)},
                     {"gamma", std::move(gamma)},
                     {"gamma_params", r.gamma_params},
                     {"gamma_se", r.gamma_se},
                     {"loglik", r.strength_loglik},
                     {"converged", r.strength_converged}};
  out["evaluations"] = r.evaluations;
  out["trace"] = r.trace;
  return out;
}

Json to_json(const DeltaDistribution& d) {
  Json out;
  out["metric"] = d.metric;
  out["point"] = d.point;
  out["bias"] = d.bias;
  out["level"] = d.level;
  out["percentile_ci"] = {d.percentile.lower, d.percentile.upper};
  out["normal_ci"] = {d.normal.lower, d.normal.upper};
  out["replicate_count"] = d.replicate_count;
  out["failures"] = d.failures;
  out["block_length"] = d.block_length;
  out["seed"] = d.seed;
  out["replicates"] = d.replicates;
  return out;
}

Json error_json(const std::exception& e) {
  const auto* fc = dynamic_cast<const Error*>(&e);
  Json body;
  body["kind"] = fc ? fc->kind() : "error";
  body["message"] = e.what();
  if (const auto* pe = dynamic_cast<const ParseError*>(&e); pe && pe->row() > 0) {
    body["row"] = pe->row();
    if (pe->column() > 0) body["column"] = pe->column();
  }
  return Json{{"error", body}};
}

}  // namespace fcnet
