#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fcnet/error.hpp"
#include "fcnet/graph.hpp"
#include "support.hpp"

using namespace fcnet;
using namespace fcnet::testing;

namespace {

BinaryNetwork k4_minus_edge() {  // missing pair (2, 3)
  return BinaryNetwork(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}});
}

// Triangles and connected triples by enumerating node triples.
std::pair<double, double> triangle_census(const BinaryNetwork& g) {
  const auto a = adjacency(g);
  double triangles = 0, triples = 0;
  const int n = g.size();
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y)
      for (int z = y + 1; z < n; ++z) {
        const int links = a[x][y] + a[x][z] + a[y][z];
        if (links == 3) {
          triangles += 1;
          triples += 3;
        } else if (links == 2) {
          triples += 1;
        }
      }
  return {triangles, triples};
}

// Local efficiency with neighbour-restricted Floyd-Warshall.
double local_efficiency_oracle(const BinaryNetwork& g) {
  double total = 0;
  for (int i = 0; i < g.size(); ++i) {
    const auto& nb = g.neighbors(i);
    if (nb.size() < 2) continue;
    const auto sub = induced_subgraph(g, nb);
    const auto d = floyd_warshall(sub);
    double s = 0;
    for (int a = 0; a < sub.size(); ++a)
      for (int b = 0; b < sub.size(); ++b)
        if (a != b && !std::isinf(d(a, b))) s += 1 / d(a, b);
    total += s / (nb.size() * (nb.size() - 1.0));
  }
  return total / g.size();
}

// Degree correlation as the Pearson coefficient over both edge orientations.
double assortativity_oracle(const BinaryNetwork& g) {
  std::vector<double> x, y;
  for (const auto& e : g.edges()) {
    const double a = g.degrees()[e.i], b = g.degrees()[e.j];
    x.insert(x.end(), {a, b});
    y.insert(y.end(), {b, a});
  }
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - mx);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  return sxy / sxx;
}

BinaryNetwork random_graph(int n, double p, Rng& rng) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (uniform01(rng) < p) e.push_back({i, j});
  return BinaryNetwork(n, e);
}

}  // namespace

TEST_CASE("clustering on triangles, stars and K4 minus an edge") {
  const auto k3 = complete_graph(3);
  CHECK(clustering(k3, ClusteringVariant::MeanLocal).value == 1.0);
  CHECK(clustering(k3, ClusteringVariant::Transitivity).value == 1.0);
  CHECK(clustering(star_graph(4), ClusteringVariant::MeanLocal).value == 0.0);
  CHECK(clustering(star_graph(4), ClusteringVariant::Transitivity).value == 0.0);

  const auto g = k4_minus_edge();
  const auto [triangles, triples] = triangle_census(g);
  CHECK(triangles == 2);
  CHECK(triples == 8);
  CHECK(clustering(g, ClusteringVariant::Transitivity).value == doctest::Approx(0.75));
  // Nodes 0, 1: one missing pair of three; nodes 2, 3: fully closed.
  CHECK(clustering(g, ClusteringVariant::MeanLocal).value == doctest::Approx(5.0 / 6.0));
  CHECK(clustering(BinaryNetwork(5, {}), ClusteringVariant::MeanLocal).value == 0.0);
}

TEST_CASE("transitivity matches the triple census on random graphs") {
  Rng rng(1);
  for (int rep = 0; rep < 30; ++rep) {
    const auto g = random_graph(12, 0.35, rng);
    const auto [triangles, triples] = triangle_census(g);
    const double expected = triples > 0 ? 3 * triangles / triples : 0.0;
    CHECK(clustering(g, ClusteringVariant::Transitivity).value == doctest::Approx(expected));
  }
}

TEST_CASE("local efficiency") {
  CHECK(local_efficiency(complete_graph(4)).value == 1.0);
  CHECK(local_efficiency(star_graph(4)).value == 0.0);
  const auto g = k4_minus_edge();
  CHECK(local_efficiency_oracle(g) == doctest::Approx(11.0 / 12.0));
  CHECK(local_efficiency(g).value == doctest::Approx(11.0 / 12.0));
  Rng rng(2);
  for (int rep = 0; rep < 30; ++rep) {
    const auto h = random_graph(10, 0.4, rng);
    const auto r = local_efficiency(h);
    CHECK(r.value == doctest::Approx(local_efficiency_oracle(h)));
    CHECK(r.value >= 0.0);
    CHECK(r.value <= 1.0);
  }
}

TEST_CASE("global efficiency and path length") {
  CHECK(global_efficiency(complete_graph(6)).value == 1.0);
  CHECK(global_efficiency(BinaryNetwork(5, {})).value == 0.0);
  CHECK(global_efficiency(path_graph(3)).value == doctest::Approx(5.0 / 6.0));
  CHECK(path_length(complete_graph(6)).value == 1.0);
  CHECK(path_length(path_graph(3)).value == doctest::Approx(4.0 / 3.0));

  const BinaryNetwork two_pairs(4, {{0, 1}, {2, 3}});
  const auto r = path_length(two_pairs);
  CHECK(r.value == 1.0);
  CHECK(r.unreachable_pairs == 8);
  CHECK_THROWS_AS(path_length(BinaryNetwork(3, {})), UndefinedMetric);

  Rng rng(3);
  for (int rep = 0; rep < 30; ++rep) {
    const auto g = random_graph(15, 0.3, rng);
    const auto d = floyd_warshall(g);
    CHECK(distance_matrix(g) == d);
    const auto eg = global_efficiency(g).value;
    CHECK(eg >= 0.0);
    CHECK(eg <= 1.0);
    if (largest_component(g).size() == 15) CHECK(eg >= 1.0 / path_length(g).value - 1e-12);
  }
}

TEST_CASE("betweenness of a star hub and against path enumeration") {
  const auto star = star_graph(5);
  const auto b = centrality(star, CentralityKind::Betweenness);
  // Oracle: every one of the C(5, 2) leaf pairs routes through the hub.
  CHECK((*b.per_node)[0] == 10.0);
  CHECK(brute_force_betweenness(star)[0] == 10.0);

  Rng rng(4);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 3 + static_cast<int>(uniform_index(rng, 5));
    const auto g = random_graph(n, 0.2 + 0.6 * uniform01(rng), rng);
    const auto fast = *centrality(g, CentralityKind::Betweenness).per_node;
    const auto slow = brute_force_betweenness(g);
    for (int v = 0; v < n; ++v) CHECK(fast[v] == doctest::Approx(slow[v]));
  }
}

TEST_CASE("edge betweenness sums to the total shortest-path length") {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const auto g = random_graph(9, 0.4, rng);
    const auto eb = edge_betweenness(g);
    const auto d = floyd_warshall(g);
    double total = 0;
    for (int i = 0; i < 9; ++i)
      for (int j = i + 1; j < 9; ++j)
        if (!std::isinf(d(i, j))) total += d(i, j);
    CHECK(std::accumulate(eb.begin(), eb.end(), 0.0) == doctest::Approx(total));
  }
}

TEST_CASE("closeness, degree and eigenvector centrality") {
  const auto k5 = complete_graph(5);
  CHECK(centrality(k5, CentralityKind::Closeness).per_node->isOnes(0.0));
  CHECK((*centrality(star_graph(6), CentralityKind::Degree).per_node)[0] == 6.0);

  const auto ev = *centrality(cycle_graph(8), CentralityKind::Eigenvector).per_node;
  for (int v = 0; v < 8; ++v) CHECK(ev[v] == doctest::Approx(1.0 / std::sqrt(8.0)));
  CHECK(ev.norm() == doctest::Approx(1.0));

  // Disconnected: the small component gets zero.
  const BinaryNetwork g(6, {{0, 1}, {1, 2}, {2, 0}, {2, 3}, {4, 5}});
  const auto e2 = *centrality(g, CentralityKind::Eigenvector).per_node;
  CHECK(e2[4] == 0.0);
  CHECK(e2[5] == 0.0);
  CHECK(e2.minCoeff() >= 0.0);
  CHECK_THROWS_AS(centrality(BinaryNetwork(3, {}), CentralityKind::Eigenvector), UndefinedMetric);

  // Closeness inside a component: path of three has center 1, ends 2/3.
  const auto c = *centrality(BinaryNetwork(5, {{0, 1}, {1, 2}, {3, 4}}), CentralityKind::Closeness)
                      .per_node;
  CHECK(c[1] == 1.0);
  CHECK(c[0] == doctest::Approx(2.0 / 3.0));
  CHECK(c[3] == 1.0);
}

TEST_CASE("assortativity") {
  CHECK(assortativity(star_graph(5)).value == doctest::Approx(-1.0));
  CHECK_THROWS_AS(assortativity(cycle_graph(6)), UndefinedMetric);

  // Two K4 cliques whose hubs 3 and 4 are joined through path nodes 8, 9.
  std::vector<Edge> e;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      e.push_back({i, j});
      e.push_back({i + 4, j + 4});
    }
  e.insert(e.end(), {{3, 8}, {8, 9}, {9, 4}});
  const BinaryNetwork barbell(10, e);
  const double r = assortativity(barbell).value;
  CHECK(r < 0.0);
  CHECK(r == doctest::Approx(assortativity_oracle(barbell)));

  Rng rng(6);
  for (int rep = 0; rep < 30; ++rep) {
    const auto g = random_graph(14, 0.3, rng);
    try {
      const double v = assortativity(g).value;
      CHECK(v == doctest::Approx(assortativity_oracle(g)));
      CHECK(v >= -1.0 - 1e-12);
      CHECK(v <= 1.0 + 1e-12);
    } catch (const UndefinedMetric&) {
    }
  }
}

TEST_CASE("degree sequence") {
  CHECK(degree_sequence(complete_graph(4)) == std::vector<int>{3, 3, 3, 3});
  CHECK(degree_sequence(star_graph(4)) == std::vector<int>{4, 1, 1, 1, 1});
  Rng rng(7);
  const auto g = random_graph(20, 0.3, rng);
  const auto d = degree_sequence(g);
  CHECK(std::accumulate(d.begin(), d.end(), 0) == static_cast<int>(2 * g.edge_count()));
}

TEST_CASE("unit weights reproduce the binary metrics") {
  Rng rng(8);
  for (int rep = 0; rep < 10; ++rep) {
    const auto g = random_graph(12, 0.35, rng);
    const auto w = with_unit_weights(g);
    CHECK(clustering(w, ClusteringVariant::WeightedGeometric).value ==
          doctest::Approx(clustering(g, ClusteringVariant::MeanLocal).value));
    CHECK(local_efficiency(w).value == doctest::Approx(local_efficiency(g).value));
    CHECK(global_efficiency(w).value == doctest::Approx(global_efficiency(g).value));
    if (g.edge_count() > 0) {
      CHECK(path_length(w).value == doctest::Approx(path_length(g).value));
      CHECK(*centrality(w, CentralityKind::Eigenvector).per_node ==
            *centrality(g, CentralityKind::Eigenvector).per_node);
    }
    for (auto kind : {CentralityKind::Degree, CentralityKind::Betweenness,
                      CentralityKind::Closeness}) {
      const auto a = *centrality(w, kind).per_node, b = *centrality(g, kind).per_node;
      CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("weighted shortest paths use inverse weights") {
  // Direct edge 0-2 of weight 0.25 (length 4) loses to 0-1-2 with weights 1 (length 2).
  const WeightedNetwork w(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 0.25}});
  CHECK(distance_matrix(w)(0, 2) == 2.0);
  CHECK((*centrality(w, CentralityKind::Betweenness).per_node)[1] == 1.0);
}

TEST_CASE("relabelling permutes per-node values and keeps global ones") {
  Rng rng(9);
  const auto g = random_graph(11, 0.4, rng);
  std::vector<int> perm(11);
  std::iota(perm.begin(), perm.end(), 0);
  shuffle(perm, rng);
  const auto h = relabel(g, perm);
  for (auto variant : {ClusteringVariant::MeanLocal, ClusteringVariant::Transitivity})
    CHECK(clustering(g, variant).value == doctest::Approx(clustering(h, variant).value));
  CHECK(global_efficiency(g).value == doctest::Approx(global_efficiency(h).value));
  CHECK(local_efficiency(g).value == doctest::Approx(local_efficiency(h).value));
  for (auto kind : {CentralityKind::Degree, CentralityKind::Betweenness,
                    CentralityKind::Closeness}) {
    const auto a = *centrality(g, kind).per_node, b = *centrality(h, kind).per_node;
    for (int v = 0; v < 11; ++v) CHECK(a[v] == doctest::Approx(b[perm[v]]));
  }
}
