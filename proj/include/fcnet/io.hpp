#pragma once

#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fcnet/community.hpp"
#include "fcnet/ergm.hpp"
#include "fcnet/errorprop.hpp"
#include "fcnet/estimate.hpp"
#include "fcnet/graph.hpp"
#include "fcnet/groupstat.hpp"
#include "fcnet/mixedmodel.hpp"
#include "fcnet/network.hpp"
#include "fcnet/nullmodel.hpp"

namespace fcnet {

/// Insertion-ordered, so serialized reports are byte-stable.
using Json = nlohmann::ordered_json;

/// Pretty-printed with a trailing newline. NaN and infinities become null.
void write_json(const std::filesystem::path& path, const Json& doc);
Json read_json(const std::filesystem::path& path);
/// FNV-1a 64 of the compact serialization, as 16 hex digits.
std::string json_hash(const Json& doc);

/// n x n CSV plus a sidecar "<stem>.json" holding the measure and parameters.
std::filesystem::path sidecar_path(const std::filesystem::path& csv);
void save_connection_matrix(const std::filesystem::path& csv, const ConnectionMatrix& cm);
/// Without a sidecar the measure defaults to correlation.
ConnectionMatrix load_connection_matrix(const std::filesystem::path& csv);

/// Edge list: a "# {json}" header with n, weighted and the provenance, then
/// one "i<TAB>j[<TAB>weight]" line per edge (0-based nodes).
void save_network(const std::filesystem::path& tsv, const BinaryNetwork& g);
void save_network(const std::filesystem::path& tsv, const WeightedNetwork& g);

struct NetworkFile {
  int node_count = 0;
  bool weighted = false;
  std::vector<WeightedEdge> edges;
  Provenance provenance;

  BinaryNetwork binary() const;
  /// Unit weights for an unweighted file.
  WeightedNetwork weighted_network() const;
};
NetworkFile load_network(const std::filesystem::path& tsv);

/// "node,community" rows.
void save_partition_csv(const std::filesystem::path& csv, const std::vector<int>& assignment);
/// "node,z,participation,role" rows.
void save_roles_csv(const std::filesystem::path& csv, const std::vector<NodeRole>& roles);

/// Rows are flat JSON objects of scalars; columns are the union of keys in
/// first-seen order. Missing and null cells are empty; strings are quoted
/// when they contain a comma or quote.
void save_table_csv(const std::filesystem::path& csv, const Json& rows);

/// Flat table: subject, task, node_j, node_k, presence, strength (nan when
/// absent), then the covariate columns.
void save_dyad_dataset(const std::filesystem::path& csv, const DyadDataset& data);
/// Coordinates and task times are not part of the table.
DyadDataset load_dyad_dataset(const std::filesystem::path& csv);

Json to_json(const Provenance& p);
Json to_json(const MetricReport& r);
Json to_json(const SmallWorldResult& r);
Json to_json(const PowerLawFit& r);
Json to_json(const Partition& p);
Json to_json(const std::vector<NodeRole>& roles);
Json to_json(const EdgeTestResult& r);
/// Includes the full permutation null of maximum cluster sizes.
Json to_json(const ComponentResult& r);
Json to_json(const ErgmFit& r);
Json to_json(const RepresentativeResult& r, const ErgmSpec& spec);
Json to_json(const CorrelationStructure& s);
Json to_json(const TwoPartFit& r);
/// Includes the raw replicate vector.
Json to_json(const DeltaDistribution& d);
Json edges_json(const std::vector<Edge>& edges);

/// {"error": {"kind": ..., "message": ...}} for any exception.
Json error_json(const std::exception& e);

}  // namespace fcnet
