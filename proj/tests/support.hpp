#pragma once

// Graph builders and brute-force oracles shared by the unit and acceptance
// tests. The oracles avoid the library's own traversal code.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "fcnet/network.hpp"
#include "fcnet/random.hpp"

namespace fcnet::testing {

inline BinaryNetwork complete_graph(int n) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.push_back({i, j});
  return BinaryNetwork(n, e);
}

/// Hub 0 joined to leaves 1..leaves.
inline BinaryNetwork star_graph(int leaves) {
  std::vector<Edge> e;
  for (int j = 1; j <= leaves; ++j) e.push_back({0, j});
  return BinaryNetwork(leaves + 1, e);
}

inline BinaryNetwork path_graph(int n) {
  std::vector<Edge> e;
  for (int i = 0; i + 1 < n; ++i) e.push_back({i, i + 1});
  return BinaryNetwork(n, e);
}

inline BinaryNetwork cycle_graph(int n) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i) e.push_back({i, (i + 1) % n});
  return BinaryNetwork(n, e);
}

/// Each node joined to its k/2 nearest neighbours on each side.
inline BinaryNetwork ring_lattice(int n, int k) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int d = 1; d <= k / 2; ++d) e.push_back({i, (i + d) % n});
  return BinaryNetwork(n, e);
}

inline BinaryNetwork erdos_renyi(int n, double mean_degree, std::uint64_t seed) {
  Rng rng(seed);
  const double p = mean_degree / (n - 1);
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (uniform01(rng) < p) e.push_back({i, j});
  return BinaryNetwork(n, e);
}

/// Ring lattice whose clockwise edges are rewired with probability p.
inline BinaryNetwork watts_strogatz(int n, int k, double p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int d = 1; d <= k / 2; ++d) adj[i][(i + d) % n] = adj[(i + d) % n][i] = 1;
  for (int d = 1; d <= k / 2; ++d)
    for (int i = 0; i < n; ++i) {
      const int j = (i + d) % n;
      if (!(uniform01(rng) < p) || !adj[i][j]) continue;
      int t;
      do {
        t = static_cast<int>(uniform_index(rng, n));
      } while (t == i || adj[i][t]);
      adj[i][j] = adj[j][i] = 0;
      adj[i][t] = adj[t][i] = 1;
    }
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (adj[i][j]) e.push_back({i, j});
  return BinaryNetwork(n, e);
}

inline std::vector<std::vector<char>> adjacency(const BinaryNetwork& g) {
  std::vector<std::vector<char>> a(g.size(), std::vector<char>(g.size(), 0));
  for (const auto& e : g.edges()) a[e.i][e.j] = a[e.j][e.i] = 1;
  return a;
}

/// Floyd-Warshall hop distances (inf when unreachable).
inline Eigen::MatrixXd floyd_warshall(const BinaryNetwork& g) {
  const int n = g.size();
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, n, inf);
  for (int i = 0; i < n; ++i) d(i, i) = 0;
  for (const auto& e : g.edges()) d(e.i, e.j) = d(e.j, e.i) = 1;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
  return d;
}

/// Betweenness by enumerating every simple path of minimum length between
/// each unordered pair.
inline std::vector<double> brute_force_betweenness(const BinaryNetwork& g) {
  const int n = g.size();
  const auto a = adjacency(g);
  const auto d = floyd_warshall(g);
  std::vector<double> out(n, 0.0);
  for (int s = 0; s < n; ++s)
    for (int t = s + 1; t < n; ++t) {
      if (std::isinf(d(s, t))) continue;
      const int len = static_cast<int>(d(s, t));
      std::vector<int> through(n, 0);
      long total = 0;
      std::vector<int> path{s};
      std::vector<char> used(n, 0);
      used[s] = 1;
      std::function<void()> extend = [&] {
        const int v = path.back();
        if (static_cast<int>(path.size()) - 1 == len) {
          if (v != t) return;
          ++total;
          for (std::size_t k = 1; k + 1 < path.size(); ++k) ++through[path[k]];
          return;
        }
        for (int w = 0; w < n; ++w)
          if (a[v][w] && !used[w]) {
            used[w] = 1;
            path.push_back(w);
            extend();
            path.pop_back();
            used[w] = 0;
          }
      };
      extend();
      for (int v = 0; v < n; ++v) out[v] += static_cast<double>(through[v]) / total;
    }
  return out;
}

/// Edge betweenness by the same enumeration, keyed like g.edges().
inline std::vector<double> brute_force_edge_betweenness(const BinaryNetwork& g) {
  const int n = g.size();
  const auto a = adjacency(g);
  const auto d = floyd_warshall(g);
  const auto& edges = g.edges();
  auto edge_index = [&](int u, int v) {
    const Edge key{std::min(u, v), std::max(u, v)};
    return static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), key) -
                                    edges.begin());
  };
  std::vector<double> out(edges.size(), 0.0);
  for (int s = 0; s < n; ++s)
    for (int t = s + 1; t < n; ++t) {
      if (std::isinf(d(s, t))) continue;
      const int len = static_cast<int>(d(s, t));
      std::vector<double> through(edges.size(), 0.0);
      long total = 0;
      std::vector<int> path{s};
      std::function<void()> extend = [&] {
        const int v = path.back();
        if (static_cast<int>(path.size()) - 1 == len) {
          if (v != t) return;
          ++total;
          for (std::size_t k = 0; k + 1 < path.size(); ++k)
            through[edge_index(path[k], path[k + 1])] += 1;
          return;
        }
        for (int w = 0; w < n; ++w)
          if (a[v][w] && std::find(path.begin(), path.end(), w) == path.end()) {
            path.push_back(w);
            extend();
            path.pop_back();
          }
      };
      extend();
      for (std::size_t e = 0; e < edges.size(); ++e) out[e] += through[e] / total;
    }
  return out;
}

/// Modularity from the node-pair form (1/2m) sum_ij (A_ij - k_i k_j / 2m) [c_i == c_j].
inline double modularity_oracle(const BinaryNetwork& g, const std::vector<int>& c) {
  const auto a = adjacency(g);
  const double two_m = 2.0 * g.edge_count();
  double q = 0;
  for (int i = 0; i < g.size(); ++i)
    for (int j = 0; j < g.size(); ++j)
      if (c[i] == c[j]) q += a[i][j] - g.degrees()[i] * double(g.degrees()[j]) / two_m;
  return q / two_m;
}

/// Planted partition: `blocks` groups of `size` nodes.
inline BinaryNetwork planted_partition(int blocks, int size, double p_in, double p_out,
                                       std::uint64_t seed) {
  Rng rng(seed);
  const int n = blocks * size;
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (uniform01(rng) < (i / size == j / size ? p_in : p_out)) e.push_back({i, j});
  return BinaryNetwork(n, e);
}

/// Node permutation applied to a graph: node v becomes perm[v].
inline BinaryNetwork relabel(const BinaryNetwork& g, const std::vector<int>& perm) {
  std::vector<Edge> e;
  for (const auto& x : g.edges()) e.push_back({perm[x.i], perm[x.j]});
  return BinaryNetwork(g.size(), e);
}

}  // namespace fcnet::testing
