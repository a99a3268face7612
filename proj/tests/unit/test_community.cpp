#include <doctest.h>

#include <numeric>

#include "fcnet/community.hpp"
#include "fcnet/error.hpp"
#include "fcnet/graph.hpp"
#include "support.hpp"

using namespace fcnet;
using namespace fcnet::testing;

namespace {

BinaryNetwork two_triangles() {
  return BinaryNetwork(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
}

BinaryNetwork random_graph(int n, double p, Rng& rng) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (uniform01(rng) < p) e.push_back({i, j});
  return BinaryNetwork(n, e);
}

}  // namespace

TEST_CASE("modularity of trivial and component partitions") {
  const auto g = two_triangles();
  CHECK(modularity(g, std::vector<int>(6, 0)) == 0.0);
  // Each triangle holds half the edges and half the edge ends: 2 (1/2 - 1/4).
  CHECK(modularity(g, {0, 0, 0, 1, 1, 1}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(modularity(g, {7, 7, 7, 2, 2, 2}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(modularity(g, {0, 0, 0, 1, 1}), ValidationError);
  CHECK_THROWS_AS(modularity(g, {0, 0, 0, 1, 1, -1}), ValidationError);
  CHECK_THROWS_AS(modularity(BinaryNetwork(3, {}), {0, 0, 0}), UndefinedMetric);
}

TEST_CASE("modularity matches the node-pair form on small random graphs") {
  Rng rng(1);
  int checked = 0;
  while (checked < 200) {
    const int n = 2 + static_cast<int>(uniform_index(rng, 6));
    const auto g = random_graph(n, 0.5, rng);
    if (g.edge_count() == 0) continue;
    std::vector<int> c(n);
    for (auto& x : c) x = static_cast<int>(uniform_index(rng, 3));
    CHECK(modularity(g, c) == doctest::Approx(modularity_oracle(g, c)).epsilon(1e-12));
    CHECK(modularity(g, c) < 1.0);
    ++checked;
  }
}

TEST_CASE("weighted modularity with unit weights equals the binary value") {
  Rng rng(2);
  const auto g = random_graph(15, 0.3, rng);
  std::vector<int> c(15);
  for (auto& x : c) x = static_cast<int>(uniform_index(rng, 4));
  CHECK(modularity(with_unit_weights(g), c) == doctest::Approx(modularity(g, c)));
}

TEST_CASE("random partitions of an ER graph have near-zero modularity") {
  const auto g = erdos_renyi(200, 8.0, 3);
  Rng rng(4);
  double total = 0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<int> c(200);
    for (auto& x : c) x = static_cast<int>(uniform_index(rng, 4));
    total += modularity(g, c);
  }
  CHECK(total / 100 <= 0.02);
}

TEST_CASE("louvain recovers disjoint cliques and planted blocks") {
  const auto p = louvain(two_triangles(), 1);
  CHECK(p.assignment == std::vector<int>{0, 0, 0, 1, 1, 1});
  CHECK(p.modularity == doctest::Approx(0.5));
  CHECK(p.community_count == 2);

  std::vector<int> truth(100);
  for (int v = 0; v < 100; ++v) truth[v] = v / 25;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = planted_partition(4, 25, 0.9, 0.05, 100 + seed);
    const auto part = louvain(g, seed);
    CHECK(normalized_mutual_information(part.assignment, truth) >= 0.9);
    CHECK(part.modularity >= 0.0);
    CHECK(part.modularity == doctest::Approx(modularity(g, part.assignment)));
  }
  CHECK_THROWS_AS(louvain(BinaryNetwork(4, {}), 0), ValidationError);
}

TEST_CASE("louvain is deterministic per seed and never worse than one community") {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const auto g = random_graph(30, 0.15, rng);
    if (g.edge_count() == 0) continue;
    const auto a = louvain(g, rep), b = louvain(g, rep);
    CHECK(a.assignment == b.assignment);
    CHECK(a.modularity >= -1e-12);
  }
}

TEST_CASE("repeated louvain runs report pairwise agreement") {
  const auto g = planted_partition(3, 20, 0.5, 0.1, 7);
  const auto runs = louvain_runs(g, 6, 11);
  CHECK(runs.runs.size() == 6);
  CHECK(runs.agreement.rows() == 6);
  CHECK(runs.agreement.diagonal().isOnes());
  CHECK(runs.agreement == runs.agreement.transpose());
  for (const auto& r : runs.runs) CHECK(r.modularity <= runs.runs[runs.best].modularity);
}

TEST_CASE("normalized mutual information") {
  CHECK(normalized_mutual_information({0, 0, 1, 1}, {5, 5, 2, 2}) == doctest::Approx(1.0));
  CHECK(normalized_mutual_information({0, 0, 0, 0}, {0, 0, 0, 0}) == 1.0);
  CHECK(normalized_mutual_information({0, 1, 0, 1}, {0, 0, 1, 1}) == doctest::Approx(0.0));
}

TEST_CASE("girvan-newman cuts the bridge first and recovers components") {
  std::vector<Edge> e;
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j) {
      e.push_back({i, j});
      e.push_back({i + 5, j + 5});
    }
  e.push_back({4, 5});
  const BinaryNetwork barbell(10, e);
  const auto oracle = brute_force_edge_betweenness(barbell);
  const auto bridge = std::max_element(oracle.begin(), oracle.end()) - oracle.begin();
  CHECK(barbell.edges()[bridge] == Edge{4, 5});
  const auto gn = girvan_newman(barbell);
  CHECK(gn.removed.front() == Edge{4, 5});
  CHECK(gn.best.assignment == std::vector<int>{0, 0, 0, 0, 0, 1, 1, 1, 1, 1});

  const auto t = girvan_newman(two_triangles());
  CHECK(t.best.modularity == doctest::Approx(0.5));
  CHECK(t.best.assignment == louvain(two_triangles(), 3).assignment);

  const auto k3 = girvan_newman(complete_graph(3));
  CHECK(k3.best.community_count == 1);
  CHECK(k3.best.modularity == 0.0);

  CHECK_THROWS_AS(girvan_newman(BinaryNetwork(501, {{0, 1}})), ValidationError);
}

TEST_CASE("edge betweenness matches path enumeration") {
  Rng rng(6);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 3 + static_cast<int>(uniform_index(rng, 5));
    const auto g = random_graph(n, 0.5, rng);
    const auto fast = edge_betweenness(g);
    const auto slow = brute_force_edge_betweenness(g);
    for (std::size_t k = 0; k < fast.size(); ++k) CHECK(fast[k] == doctest::Approx(slow[k]));
  }
}

TEST_CASE("cartography roles") {
  for (const auto& r : cartography(two_triangles(), {0, 0, 0, 1, 1, 1})) {
    CHECK(r.role == Role::R1);
    CHECK(r.within_module_z == 0.0);
    CHECK(r.participation == 0.0);
  }

  // Node 0 links twice into each of four modules.
  std::vector<Edge> e;
  std::vector<int> c(9);
  c[0] = 0;
  for (int v = 1; v <= 8; ++v) {
    e.push_back({0, v});
    c[v] = (v - 1) / 2;
  }
  const auto roles = cartography(BinaryNetwork(9, e), c);
  CHECK(roles[0].participation == doctest::Approx(1 - 4 * 0.0625));
  CHECK(roles[0].participation == doctest::Approx(0.75));

  // Singleton community is flagged and gets z = 0.
  const auto single = cartography(BinaryNetwork(3, {{0, 1}, {1, 2}}), {0, 0, 1});
  CHECK(single[2].singleton_community);
  CHECK(single[2].within_module_z == 0.0);

  CHECK(classify_role(0.0, 0.0) == Role::R1);
  CHECK(classify_role(0.0, 0.5) == Role::R2);
  CHECK(classify_role(0.0, 0.7) == Role::R3);
  CHECK(classify_role(0.0, 0.9) == Role::R4);
  CHECK(classify_role(3.0, 0.1) == Role::R5);
  CHECK(classify_role(3.0, 0.5) == Role::R6);
  CHECK(classify_role(3.0, 0.9) == Role::R7);
  CHECK(classify_role(2.0, 0.1, {.hub_z = 1.5}) == Role::R5);
  CHECK(to_string(Role::R7) == "R7");

  // A hub: z is large within a big module.
  const auto g = planted_partition(2, 30, 0.1, 0.01, 9);
  std::vector<Edge> hub_edges = g.edges();
  for (int v = 1; v < 30; ++v)
    if (!g.has_edge(0, v)) hub_edges.push_back({0, v});
  std::vector<int> blocks(60);
  for (int v = 0; v < 60; ++v) blocks[v] = v / 30;
  const auto hr = cartography(BinaryNetwork(60, hub_edges), blocks);
  CHECK(hr[0].within_module_z >= 2.5);
  CHECK((hr[0].role == Role::R5 || hr[0].role == Role::R6 || hr[0].role == Role::R7));
  for (const auto& r : hr) {
    CHECK(r.participation >= 0.0);
    CHECK(r.participation <= 1.0);
    CHECK(r.role == classify_role(r.within_module_z, r.participation));
  }
}
