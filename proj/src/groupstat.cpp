#include "fcnet/groupstat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fcnet/error.hpp"
#include "fcnet/parallel.hpp"
#include "fcnet/random.hpp"

namespace fcnet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// |r| = 1 would map to infinity.
constexpr double kMaxAbsCorrelation = 1.0 - 1e-12;

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

void check_groups(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int node_count) {
  if (a.rows() < 2 || b.rows() < 2)
    throw ValidationError("each group needs at least 2 subjects");
  const auto pairs = static_cast<Eigen::Index>(node_count) * (node_count - 1) / 2;
  if (a.cols() != pairs || b.cols() != pairs)
    throw ShapeError("edge sample columns do not match the node count");
}

bool exceeds(double t, double threshold, Tail tail) {
  switch (tail) {
    case Tail::Greater: return t > threshold;
    case Tail::Less: return t < -threshold;
    case Tail::TwoSided: break;
  }
  return std::abs(t) > threshold;
}

std::vector<Edge> supra_threshold(const Eigen::VectorXd& t, const std::vector<Edge>& pairs,
                                  const ComponentOptions& options) {
  std::vector<Edge> out;
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    if (!options.tested.empty() && !options.tested[k]) continue;
    if (exceeds(t[k], options.t_threshold, options.tail)) out.push_back(pairs[k]);
  }
  return out;
}

using ClusterFn = std::vector<std::vector<Edge>> (*)(const std::vector<Edge>&, int,
                                                      const NodeAdjacency*);

std::vector<std::vector<Edge>> nbs_clusters(const std::vector<Edge>& edges, int n,
                                            const NodeAdjacency*) {
  return edge_components(n, edges);
}

std::vector<std::vector<Edge>> spc_clusters(const std::vector<Edge>& edges, int,
                                            const NodeAdjacency* adjacency) {
  return pairwise_clusters(edges, *adjacency);
}

ComponentResult cluster_inference(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                  int node_count, const ComponentOptions& options,
                                  const NodeAdjacency* adjacency, ClusterFn clusters_of,
                                  std::string method) {
  check_groups(a, b, node_count);
  if (options.permutations < 100) throw ValidationError("at least 100 permutations are required");
  if (!options.tested.empty() && options.tested.size() != static_cast<std::size_t>(a.cols()))
    throw ShapeError("tested mask length does not match the edge count");
  if (!(options.t_threshold >= 0)) throw DomainError("t threshold must be non-negative");

  const auto pairs = edge_pairs(node_count);
  ComponentResult result;
  result.method = std::move(method);
  result.permutations = options.permutations;
  result.t_threshold = options.t_threshold;
  result.tail = options.tail;
  result.t = two_sample_t(a, b);

  for (auto& edges : clusters_of(supra_threshold(result.t, pairs, options), node_count, adjacency))
    result.clusters.push_back({edges, static_cast<int>(edges.size()), 1.0});
  std::stable_sort(result.clusters.begin(), result.clusters.end(),
                   [](const Cluster& x, const Cluster& y) { return x.size > y.size; });

  const Eigen::Index na = a.rows(), total = a.rows() + b.rows();
  Eigen::MatrixXd pooled(total, a.cols());
  pooled << a, b;
  result.null_max.assign(options.permutations, 0);
  parallel_for(static_cast<std::size_t>(options.permutations), [&](std::size_t k) {
    Rng rng = make_rng(options.seed, k);
    std::vector<Eigen::Index> order(total);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    shuffle(order, rng);
    const std::vector<Eigen::Index> first(order.begin(), order.begin() + na);
    const std::vector<Eigen::Index> second(order.begin() + na, order.end());
    const Eigen::VectorXd t = two_sample_t(pooled(first, Eigen::all), pooled(second, Eigen::all));
    int largest = 0;
    for (const auto& c : clusters_of(supra_threshold(t, pairs, options), node_count, adjacency))
      largest = std::max(largest, static_cast<int>(c.size()));
    result.null_max[k] = largest;
  });

  for (auto& c : result.clusters) {
    const auto at_least = std::count_if(result.null_max.begin(), result.null_max.end(),
                                        [&](int m) { return m >= c.size; });
    c.p_fwe = static_cast<double>(at_least + 1) / (options.permutations + 1);
  }
  return result;
}

}  // namespace

std::vector<Edge> edge_pairs(int n) {
  std::vector<Edge> out;
  out.reserve(static_cast<std::size_t>(n) * std::max(n - 1, 0) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out.push_back({i, j});
  return out;
}

Eigen::MatrixXd edge_samples(const std::vector<ConnectionMatrix>& group) {
  if (group.empty()) throw ValidationError("empty group");
  const auto n = group.front().size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(group.size()), n * (n - 1) / 2);
  for (std::size_t s = 0; s < group.size(); ++s) {
    const auto& cm = group[s];
    if (cm.size() != n) throw ShapeError("all connection matrices must have the same size");
    const bool fisher =
        cm.measure == Measure::Correlation || cm.measure == Measure::PartialCorrelation;
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double v = cm.values(i, j);
        out(static_cast<Eigen::Index>(s), k++) =
            fisher ? std::atanh(std::clamp(v, -kMaxAbsCorrelation, kMaxAbsCorrelation)) : v;
      }
  }
  return out;
}

Eigen::VectorXd two_sample_t(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double na = static_cast<double>(a.rows()), nb = static_cast<double>(b.rows());
  const Eigen::RowVectorXd ma = a.colwise().mean(), mb = b.colwise().mean();
  const Eigen::RowVectorXd ssa = (a.rowwise() - ma).colwise().squaredNorm();
  const Eigen::RowVectorXd ssb = (b.rowwise() - mb).colwise().squaredNorm();
  const double scale = 1.0 / na + 1.0 / nb, df = na + nb - 2;
  Eigen::VectorXd t(a.cols());
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    const double diff = ma[k] - mb[k];
    const double var = (ssa[k] + ssb[k]) / df;
    // Rounding leaves tiny residual variance in copies of one value.
    const double tiny = 1e-13 * std::max(std::abs(ma[k]), std::abs(mb[k]));
    t[k] = var <= tiny * tiny ? kNaN : diff / std::sqrt(var * scale);
  }
  return t;
}

EdgeTestResult edgewise_compare(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int node_count,
                                Correction correction, Tail tail) {
  check_groups(a, b, node_count);
  EdgeTestResult r;
  r.node_count = node_count;
  r.edges = edge_pairs(node_count);
  r.group_a = static_cast<int>(a.rows());
  r.group_b = static_cast<int>(b.rows());
  r.tail = tail;
  r.correction = correction;
  r.t = two_sample_t(a, b);
  r.p.resize(r.t.size());
  r.degenerate.assign(r.t.size(), false);
  const double df = r.group_a + r.group_b - 2.0;
  for (Eigen::Index k = 0; k < r.t.size(); ++k) {
    if (std::isnan(r.t[k])) {
      r.degenerate[k] = true;
      r.p[k] = kNaN;
    } else {
      r.p[k] = student_t_pvalue(r.t[k], df, tail);
    }
  }
  r.q = adjust_pvalues(r.p, correction);
  return r;
}

EdgeTestResult edgewise_compare(const std::vector<ConnectionMatrix>& a,
                                const std::vector<ConnectionMatrix>& b, Correction correction,
                                Tail tail) {
  const auto xa = edge_samples(a), xb = edge_samples(b);
  if (a.front().size() != b.front().size()) throw ShapeError("groups differ in node count");
  return edgewise_compare(xa, xb, static_cast<int>(a.front().size()), correction, tail);
}

NodeAdjacency::NodeAdjacency(int n, const std::vector<Edge>& pairs)
    : n_(n), bits_(static_cast<std::size_t>(n) * n, 0) {
  for (const auto& e : pairs) {
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n)
      throw ShapeError("adjacency pair out of range");
    bits_[static_cast<std::size_t>(e.i) * n + e.j] = 1;
    bits_[static_cast<std::size_t>(e.j) * n + e.i] = 1;
  }
}

NodeAdjacency NodeAdjacency::from_coordinates(const Eigen::Matrix3Xd& coordinates, double radius) {
  if (!(radius >= 0)) throw DomainError("adjacency radius must be non-negative");
  const int n = static_cast<int>(coordinates.cols());
  std::vector<Edge> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((coordinates.col(i) - coordinates.col(j)).norm() <= radius) pairs.push_back({i, j});
  return NodeAdjacency(n, pairs);
}

bool pairwise_neighbors(const Edge& x, const Edge& y, const NodeAdjacency& adjacency) {
  return (adjacency.near(x.i, y.i) && adjacency.near(x.j, y.j)) ||
         (adjacency.near(x.i, y.j) && adjacency.near(x.j, y.i));
}

std::vector<std::vector<Edge>> edge_components(int n, const std::vector<Edge>& edges) {
  UnionFind uf(n);
  for (const auto& e : edges) uf.unite(e.i, e.j);
  std::vector<int> slot(n, -1);
  std::vector<std::vector<Edge>> out;
  for (const auto& e : edges) {
    const int root = uf.find(e.i);
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(out.size());
      out.emplace_back();
    }
    out[slot[root]].push_back(e);
  }
  for (auto& c : out) std::sort(c.begin(), c.end());
  return out;
}

std::vector<std::vector<Edge>> pairwise_clusters(const std::vector<Edge>& edges,
                                                 const NodeAdjacency& adjacency) {
  if (adjacency.size() == 0) throw ValidationError("spatial adjacency is required");
  for (const auto& e : edges)
    if (std::max(e.i, e.j) >= adjacency.size())
      throw ShapeError("edge endpoint outside the spatial adjacency");
  const int m = static_cast<int>(edges.size());
  UnionFind uf(m);
  for (int x = 0; x < m; ++x)
    for (int y = x + 1; y < m; ++y)
      if (pairwise_neighbors(edges[x], edges[y], adjacency)) uf.unite(x, y);
  std::vector<int> slot(m, -1), count(m, 0);
  for (int x = 0; x < m; ++x) ++count[uf.find(x)];
  std::vector<std::vector<Edge>> out;
  for (int x = 0; x < m; ++x) {
    const int root = uf.find(x);
    if (count[root] < 2) continue;
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(out.size());
      out.emplace_back();
    }
    out[slot[root]].push_back(edges[x]);
  }
  for (auto& c : out) std::sort(c.begin(), c.end());
  return out;
}

ComponentResult nbs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int node_count,
                    const ComponentOptions& options) {
  return cluster_inference(a, b, node_count, options, nullptr, nbs_clusters, "nbs");
}

ComponentResult nbs(const std::vector<ConnectionMatrix>& a, const std::vector<ConnectionMatrix>& b,
                    const ComponentOptions& options) {
  if (a.empty() || b.empty()) throw ValidationError("empty group");
  if (a.front().size() != b.front().size()) throw ShapeError("groups differ in node count");
  return nbs(edge_samples(a), edge_samples(b), static_cast<int>(a.front().size()), options);
}

ComponentResult spc(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int node_count,
                    const NodeAdjacency& adjacency, const ComponentOptions& options) {
  if (adjacency.size() != node_count)
    throw ValidationError("spatial adjacency must cover every node");
  return cluster_inference(a, b, node_count, options, &adjacency, spc_clusters, "spc");
}

ComponentResult spc(const std::vector<ConnectionMatrix>& a, const std::vector<ConnectionMatrix>& b,
                    const NodeAdjacency& adjacency, const ComponentOptions& options) {
  if (a.empty() || b.empty()) throw ValidationError("empty group");
  if (a.front().size() != b.front().size()) throw ShapeError("groups differ in node count");
  return spc(edge_samples(a), edge_samples(b), static_cast<int>(a.front().size()), adjacency,
             options);
}

}  // namespace fcnet
