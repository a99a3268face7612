#include "fcnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "fcnet/error.hpp"
#include "fcnet/parallel.hpp"

namespace fcnet {

ClusteringVariant parse_clustering_variant(const std::string& text) {
  if (text == "mean_local") return ClusteringVariant::MeanLocal;
  if (text == "transitivity") return ClusteringVariant::Transitivity;
  if (text == "weighted_geometric") return ClusteringVariant::WeightedGeometric;
  throw ValidationError("unknown clustering variant '" + text + "'");
}

std::string to_string(ClusteringVariant v) {
  switch (v) {
    case ClusteringVariant::MeanLocal: return "mean_local";
    case ClusteringVariant::Transitivity: return "transitivity";
    case ClusteringVariant::WeightedGeometric: return "weighted_geometric";
  }
  return "";
}

CentralityKind parse_centrality_kind(const std::string& text) {
  if (text == "degree") return CentralityKind::Degree;
  if (text == "betweenness") return CentralityKind::Betweenness;
  if (text == "closeness") return CentralityKind::Closeness;
  if (text == "eigenvector") return CentralityKind::Eigenvector;
  throw ValidationError("unknown centrality kind '" + text + "'");
}

std::string to_string(CentralityKind k) {
  switch (k) {
    case CentralityKind::Degree: return "degree";
    case CentralityKind::Betweenness: return "betweenness";
    case CentralityKind::Closeness: return "closeness";
    case CentralityKind::Eigenvector: return "eigenvector";
  }
  return "";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Adjacency with edge lengths; `unit` selects BFS over Dijkstra.
struct LengthGraph {
  struct Arc {
    int node;
    double length;
    int edge;
  };
  int n = 0;
  bool unit = true;
  std::vector<std::vector<Arc>> adj;
};

LengthGraph lengths_of(const BinaryNetwork& g) {
  LengthGraph out{g.size(), true, std::vector<std::vector<LengthGraph::Arc>>(g.size())};
  const auto& edges = g.edges();
  for (std::size_t k = 0; k < edges.size(); ++k) {
    out.adj[edges[k].i].push_back({edges[k].j, 1.0, static_cast<int>(k)});
    out.adj[edges[k].j].push_back({edges[k].i, 1.0, static_cast<int>(k)});
  }
  return out;
}

LengthGraph lengths_of(const WeightedNetwork& g) {
  LengthGraph out{g.size(), false, std::vector<std::vector<LengthGraph::Arc>>(g.size())};
  const auto& edges = g.edges();
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const double len = 1.0 / edges[k].weight;
    out.adj[edges[k].i].push_back({edges[k].j, len, static_cast<int>(k)});
    out.adj[edges[k].j].push_back({edges[k].i, len, static_cast<int>(k)});
  }
  return out;
}

// Single-source shortest paths with the bookkeeping Brandes needs.
struct PathTree {
  std::vector<double> dist;
  std::vector<double> sigma;
  std::vector<std::vector<std::pair<int, int>>> preds;  // (node, edge)
  std::vector<int> order;                                // nondecreasing distance
};

PathTree shortest_paths(const LengthGraph& g, int source, bool need_preds) {
  PathTree t;
  t.dist.assign(g.n, kInf);
  t.sigma.assign(g.n, 0.0);
  if (need_preds) t.preds.assign(g.n, {});
  t.dist[source] = 0.0;
  t.sigma[source] = 1.0;
  if (g.unit) {
    std::vector<int> queue{source};
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int v = queue[head];
      t.order.push_back(v);
      for (const auto& a : g.adj[v]) {
        if (t.dist[a.node] == kInf) {
          t.dist[a.node] = t.dist[v] + 1.0;
          queue.push_back(a.node);
        }
        if (t.dist[a.node] == t.dist[v] + 1.0) {
          t.sigma[a.node] += t.sigma[v];
          if (need_preds) t.preds[a.node].push_back({v, a.edge});
        }
      }
    }
    return t;
  }
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  std::vector<char> settled(g.n, 0);
  heap.push({0.0, source});
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    if (settled[v] || d > t.dist[v]) continue;
    settled[v] = 1;
    t.order.push_back(v);
    for (const auto& a : g.adj[v]) {
      const double nd = d + a.length;
      if (nd < t.dist[a.node]) {
        t.dist[a.node] = nd;
        t.sigma[a.node] = t.sigma[v];
        if (need_preds) t.preds[a.node].assign(1, {v, a.edge});
        heap.push({nd, a.node});
      } else if (nd == t.dist[a.node] && !settled[a.node]) {
        t.sigma[a.node] += t.sigma[v];
        if (need_preds) t.preds[a.node].push_back({v, a.edge});
      }
    }
  }
  return t;
}

Eigen::MatrixXd all_distances(const LengthGraph& g) {
  Eigen::MatrixXd d(g.n, g.n);
  parallel_for(static_cast<std::size_t>(g.n), [&](std::size_t s) {
    const auto t = shortest_paths(g, static_cast<int>(s), false);
    for (int v = 0; v < g.n; ++v) d(static_cast<Eigen::Index>(s), v) = t.dist[v];
  });
  return d;
}

// Sources are grouped in fixed blocks so the summation order, and hence the
// floating-point result, does not depend on the worker count.
constexpr int kSourceBlock = 32;

struct Betweenness {
  std::vector<double> node;
  std::vector<double> edge;
};

Betweenness brandes(const LengthGraph& g, std::size_t edge_count) {
  const int blocks = (g.n + kSourceBlock - 1) / kSourceBlock;
  std::vector<Betweenness> partial(static_cast<std::size_t>(blocks));
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
    auto& acc = partial[b];
    acc.node.assign(g.n, 0.0);
    acc.edge.assign(edge_count, 0.0);
    std::vector<double> delta(g.n);
    const int end = std::min(g.n, static_cast<int>(b + 1) * kSourceBlock);
    for (int s = static_cast<int>(b) * kSourceBlock; s < end; ++s) {
      const auto t = shortest_paths(g, s, true);
      std::fill(delta.begin(), delta.end(), 0.0);
      for (auto it = t.order.rbegin(); it != t.order.rend(); ++it) {
        const int w = *it;
        for (const auto& [v, e] : t.preds[w]) {
          const double share = t.sigma[v] / t.sigma[w] * (1.0 + delta[w]);
          delta[v] += share;
          acc.edge[e] += share;
        }
        if (w != s) acc.node[w] += delta[w];
      }
    }
  });
  Betweenness total{std::vector<double>(g.n, 0.0), std::vector<double>(edge_count, 0.0)};
  for (const auto& p : partial) {
    for (int v = 0; v < g.n; ++v) total.node[v] += p.node[v];
    for (std::size_t e = 0; e < edge_count; ++e) total.edge[e] += p.edge[e];
  }
  // Every unordered pair was visited from both ends.
  for (auto& x : total.node) x /= 2.0;
  for (auto& x : total.edge) x /= 2.0;
  return total;
}

MetricReport efficiency_report(const Eigen::MatrixXd& d) {
  const auto n = d.rows();
  MetricReport r{"global_efficiency", 0.0, Eigen::VectorXd::Zero(n), 0};
  if (n < 2) return r;
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) {
        if (std::isinf(d(i, j)))
          ++r.unreachable_pairs;
        else
          sum += 1.0 / d(i, j);
      }
    (*r.per_node)[i] = sum / static_cast<double>(n - 1);
  }
  r.value = r.per_node->mean();
  return r;
}

MetricReport path_length_report(const Eigen::MatrixXd& d) {
  const auto n = d.rows();
  MetricReport r{"path_length", 0.0, std::nullopt, 0};
  double sum = 0.0;
  std::size_t reachable = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (std::isinf(d(i, j))) {
        ++r.unreachable_pairs;
      } else {
        sum += d(i, j);
        ++reachable;
      }
    }
  if (reachable == 0) throw UndefinedMetric("path length: no pair of nodes is connected");
  r.value = sum / static_cast<double>(reachable);
  return r;
}

MetricReport closeness_report(const Eigen::MatrixXd& d) {
  const auto n = d.rows();
  MetricReport r{"closeness", 0.0, Eigen::VectorXd::Zero(n), 0};
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0.0;
    int reach = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) {
        if (std::isinf(d(i, j)))
          ++r.unreachable_pairs;
        else {
          sum += d(i, j);
          ++reach;
        }
      }
    (*r.per_node)[i] = reach > 0 ? reach / sum : 0.0;
  }
  r.value = n > 0 ? r.per_node->mean() : 0.0;
  return r;
}

// Local efficiency of one node: efficiency among its neighbours, paths
// restricted to the neighbour set.
double node_local_efficiency(const LengthGraph& g, int i) {
  const auto& nbrs = g.adj[i];
  const int k = static_cast<int>(nbrs.size());
  if (k < 2) return 0.0;
  std::vector<int> index(g.n, -1);
  for (int a = 0; a < k; ++a) index[nbrs[a].node] = a;
  LengthGraph sub{k, g.unit, std::vector<std::vector<LengthGraph::Arc>>(k)};
  for (int a = 0; a < k; ++a)
    for (const auto& arc : g.adj[nbrs[a].node])
      if (index[arc.node] >= 0) sub.adj[a].push_back({index[arc.node], arc.length, -1});
  double sum = 0.0;
  for (int a = 0; a < k; ++a) {
    const auto t = shortest_paths(sub, a, false);
    for (int b = 0; b < k; ++b)
      if (b != a && !std::isinf(t.dist[b])) sum += 1.0 / t.dist[b];
  }
  return sum / (static_cast<double>(k) * (k - 1));
}

MetricReport local_efficiency_of(const LengthGraph& g) {
  MetricReport r{"local_efficiency", 0.0, Eigen::VectorXd::Zero(g.n), 0};
  parallel_for(static_cast<std::size_t>(g.n), [&](std::size_t i) {
    (*r.per_node)[static_cast<Eigen::Index>(i)] = node_local_efficiency(g, static_cast<int>(i));
  });
  r.value = g.n > 0 ? r.per_node->mean() : 0.0;
  return r;
}

// Principal eigenvector of M restricted to `nodes` by power iteration on
// M + I; the shift removes the -lambda tie on bipartite components.
Eigen::VectorXd principal_eigenvector(const Eigen::MatrixXd& m, const std::vector<int>& nodes) {
  const auto k = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd sub(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = m(nodes[a], nodes[b]);
  sub.diagonal().array() += 1.0;
  Eigen::VectorXd x = Eigen::VectorXd::Constant(k, 1.0 / std::sqrt(static_cast<double>(k)));
  bool converged = false;
  for (int iter = 0; iter < 100000; ++iter) {
    Eigen::VectorXd y = sub * x;
    y /= y.norm();
    const double change = (y - x).cwiseAbs().maxCoeff();
    x = std::move(y);
    if (change < 1e-10) {
      converged = true;
      break;
    }
  }
  if (!converged) throw ConvergenceError("eigenvector centrality did not converge");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m.rows());
  for (Eigen::Index a = 0; a < k; ++a) out[nodes[a]] = std::max(0.0, x[a]);
  return out / out.norm();
}

MetricReport eigenvector_report(const BinaryNetwork& skeleton, const Eigen::MatrixXd& weights) {
  if (skeleton.edge_count() == 0)
    throw UndefinedMetric("eigenvector centrality needs at least one edge");
  MetricReport r{"eigenvector", 0.0, principal_eigenvector(weights, largest_component(skeleton)),
                 0};
  r.value = r.per_node->mean();
  return r;
}

}  // namespace

MetricReport clustering(const BinaryNetwork& g, ClusteringVariant variant) {
  const int n = g.size();
  Eigen::VectorXd triangles = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const auto& ni = g.neighbors(i);
    for (std::size_t a = 0; a < ni.size(); ++a)
      for (std::size_t b = a + 1; b < ni.size(); ++b)
        if (g.has_edge(ni[a], ni[b])) triangles[i] += 1.0;
  }
  const auto& deg = g.degrees();
  if (variant == ClusteringVariant::Transitivity) {
    double closed = 0.0, triples = 0.0;
    for (int i = 0; i < n; ++i) {
      closed += triangles[i];
      triples += deg[i] * (deg[i] - 1) / 2.0;
    }
    return {"transitivity", triples > 0 ? closed / triples : 0.0, std::nullopt, 0};
  }
  MetricReport r{"clustering_" + to_string(variant), 0.0, Eigen::VectorXd::Zero(n), 0};
  for (int i = 0; i < n; ++i)
    if (deg[i] >= 2) (*r.per_node)[i] = 2.0 * triangles[i] / (deg[i] * (deg[i] - 1.0));
  r.value = n > 0 ? r.per_node->mean() : 0.0;
  return r;
}

MetricReport clustering(const WeightedNetwork& g, ClusteringVariant variant) {
  if (variant != ClusteringVariant::WeightedGeometric) return clustering(g.skeleton(), variant);
  const int n = g.size();
  double max_w = 0.0;
  for (const auto& e : g.edges()) max_w = std::max(max_w, e.weight);
  MetricReport r{"clustering_weighted_geometric", 0.0, Eigen::VectorXd::Zero(n), 0};
  std::vector<double> row(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto& ni = g.neighbors(i);
    const auto k = static_cast<double>(ni.size());
    if (ni.size() < 2) continue;
    double sum = 0.0;
    for (std::size_t a = 0; a < ni.size(); ++a) {
      for (const auto& arc : g.neighbors(ni[a].node)) row[arc.node] = arc.weight;
      for (std::size_t b = a + 1; b < ni.size(); ++b) {
        const double w_jh = row[ni[b].node];
        if (w_jh > 0.0) sum += std::cbrt(ni[a].weight * ni[b].weight * w_jh) / max_w;
      }
      for (const auto& arc : g.neighbors(ni[a].node)) row[arc.node] = 0.0;
    }
    (*r.per_node)[i] = 2.0 * sum / (k * (k - 1.0));
  }
  r.value = n > 0 ? r.per_node->mean() : 0.0;
  return r;
}

MetricReport local_efficiency(const BinaryNetwork& g) { return local_efficiency_of(lengths_of(g)); }
MetricReport local_efficiency(const WeightedNetwork& g) {
  return local_efficiency_of(lengths_of(g));
}

Eigen::MatrixXd distance_matrix(const BinaryNetwork& g) { return all_distances(lengths_of(g)); }
Eigen::MatrixXd distance_matrix(const WeightedNetwork& g) { return all_distances(lengths_of(g)); }

MetricReport global_efficiency(const BinaryNetwork& g) {
  return efficiency_report(distance_matrix(g));
}
MetricReport global_efficiency(const WeightedNetwork& g) {
  return efficiency_report(distance_matrix(g));
}

MetricReport path_length(const BinaryNetwork& g) { return path_length_report(distance_matrix(g)); }
MetricReport path_length(const WeightedNetwork& g) {
  return path_length_report(distance_matrix(g));
}

MetricReport centrality(const BinaryNetwork& g, CentralityKind kind) {
  const int n = g.size();
  switch (kind) {
    case CentralityKind::Degree: {
      MetricReport r{"degree", 0.0, Eigen::VectorXd(n), 0};
      for (int i = 0; i < n; ++i) (*r.per_node)[i] = g.degrees()[i];
      r.value = n > 0 ? r.per_node->mean() : 0.0;
      return r;
    }
    case CentralityKind::Betweenness: {
      const auto b = brandes(lengths_of(g), g.edge_count());
      MetricReport r{"betweenness", 0.0, Eigen::Map<const Eigen::VectorXd>(b.node.data(), n), 0};
      r.value = n > 0 ? r.per_node->mean() : 0.0;
      return r;
    }
    case CentralityKind::Closeness: return closeness_report(distance_matrix(g));
    case CentralityKind::Eigenvector: {
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
      for (const auto& e : g.edges()) a(e.i, e.j) = a(e.j, e.i) = 1.0;
      return eigenvector_report(g, a);
    }
  }
  throw ValidationError("unknown centrality kind");
}

MetricReport centrality(const WeightedNetwork& g, CentralityKind kind) {
  const int n = g.size();
  switch (kind) {
    case CentralityKind::Degree: {
      MetricReport r{"strength", 0.0, Eigen::VectorXd::Zero(n), 0};
      for (const auto& e : g.edges()) {
        (*r.per_node)[e.i] += e.weight;
        (*r.per_node)[e.j] += e.weight;
      }
      r.value = n > 0 ? r.per_node->mean() : 0.0;
      return r;
    }
    case CentralityKind::Betweenness: {
      const auto b = brandes(lengths_of(g), g.edge_count());
      MetricReport r{"betweenness", 0.0, Eigen::Map<const Eigen::VectorXd>(b.node.data(), n), 0};
      r.value = n > 0 ? r.per_node->mean() : 0.0;
      return r;
    }
    case CentralityKind::Closeness: return closeness_report(distance_matrix(g));
    case CentralityKind::Eigenvector: {
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
      for (const auto& e : g.edges()) a(e.i, e.j) = a(e.j, e.i) = e.weight;
      return eigenvector_report(g.skeleton(), a);
    }
  }
  throw ValidationError("unknown centrality kind");
}

std::vector<double> edge_betweenness(const BinaryNetwork& g) {
  return brandes(lengths_of(g), g.edge_count()).edge;
}

MetricReport assortativity(const BinaryNetwork& g) {
  const auto& deg = g.degrees();
  const double l = static_cast<double>(g.edge_count());
  if (l == 0) throw UndefinedMetric("assortativity of an edgeless graph");
  double prod = 0.0, half_sum = 0.0, half_sq = 0.0;
  for (const auto& e : g.edges()) {
    const double ki = deg[e.i], kj = deg[e.j];
    prod += ki * kj;
    half_sum += 0.5 * (ki + kj);
    half_sq += 0.5 * (ki * ki + kj * kj);
  }
  const double mean_half = half_sum / l;
  const double num = prod / l - mean_half * mean_half;
  const double den = half_sq / l - mean_half * mean_half;
  if (std::abs(den) < 1e-12 * std::max(1.0, half_sq / l))
    throw UndefinedMetric("assortativity undefined: every edge joins nodes of equal degree");
  return {"assortativity", num / den, std::nullopt, 0};
}

std::vector<int> degree_sequence(const BinaryNetwork& g) { return g.degrees(); }

}  // namespace fcnet
