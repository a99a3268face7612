#include <doctest.h>

#include <cmath>

#include "fcnet/error.hpp"
#include "fcnet/groupstat.hpp"
#include "scenarios.hpp"

using namespace fcnet;
using namespace fcnet::testing;

namespace {

std::vector<ConnectionMatrix> correlation_group(int subjects, int n, Rng& rng) {
  std::vector<ConnectionMatrix> out;
  for (int s = 0; s < subjects; ++s) {
    ConnectionMatrix cm;
    cm.values = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        cm.values(i, j) = cm.values(j, i) = std::tanh(0.3 * standard_normal(rng));
    out.push_back(cm);
  }
  return out;
}

}  // namespace

TEST_CASE("edge pairs and Fisher-Z samples") {
  CHECK(edge_pairs(4) == std::vector<Edge>{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  ConnectionMatrix cm;
  cm.values = Eigen::Matrix3d{{0, 0.5, -0.2}, {0.5, 0, 1.0}, {-0.2, 1.0, 0}};
  const auto x = edge_samples({cm});
  CHECK(x(0, 0) == doctest::Approx(0.5 * std::log(3.0)));
  CHECK(x(0, 1) == doctest::Approx(std::atanh(-0.2)));
  CHECK(std::isfinite(x(0, 2)));
  cm.measure = Measure::Coherence;
  CHECK(edge_samples({cm})(0, 0) == 0.5);
}

TEST_CASE("two-sample t matches the pooled-variance formula") {
  Eigen::MatrixXd a(3, 1), b(4, 1);
  a << 1, 2, 3;
  b << 2, 4, 6, 8;
  // Means 2 and 5; SS 2 and 20; pooled variance 22/5.
  const double expected = (2.0 - 5.0) / std::sqrt(22.0 / 5.0 * (1.0 / 3 + 1.0 / 4));
  CHECK(two_sample_t(a, b)[0] == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("identical groups give t = 0 and p = 1") {
  Rng rng(1);
  const auto g = correlation_group(10, 6, rng);
  for (auto c : {Correction::None, Correction::Bonferroni, Correction::BhFdr}) {
    const auto r = edgewise_compare(g, g, c);
    CHECK(r.t.isZero());
    CHECK((r.p.array() == 1.0).all());
    CHECK((r.q.array() == 1.0).all());
    CHECK(r.group_a == 10);
  }
}

TEST_CASE("zero pooled variance flags the edge") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(3, 3), b = Eigen::MatrixXd::Ones(3, 3);
  a(0, 1) = 2;
  b(1, 1) = 0;
  const auto r = edgewise_compare(a, b, 3, Correction::Bonferroni);
  CHECK(r.degenerate == std::vector<bool>{true, false, true});
  CHECK(std::isnan(r.p[0]));
  CHECK(std::isnan(r.q[2]));
  // The family has one testable edge.
  CHECK(r.q[1] == doctest::Approx(r.p[1]));
  CHECK_THROWS_AS(edgewise_compare(a.topRows(1), b, 3, Correction::None), ValidationError);
  CHECK_THROWS_AS(edgewise_compare(a, b, 4, Correction::None), ShapeError);
}

TEST_CASE("a strongly shifted edge survives correction") {
  const auto g = simulate_groups(10, 20, 20, {{2, 7}}, 10.0, 2);
  const auto pairs = edge_pairs(10);
  const auto k = std::find(pairs.begin(), pairs.end(), Edge{2, 7}) - pairs.begin();
  for (auto c : {Correction::Bonferroni, Correction::BhFdr}) {
    const auto r = edgewise_compare(g.a, g.b, 10, c);
    CHECK(r.q[k] < 0.001);
    CHECK(r.t[k] > 0);
  }
}

TEST_CASE("correction invariants") {
  const auto g = simulate_groups(12, 8, 9, {{0, 1}, {0, 2}, {3, 4}}, 1.5, 3);
  const auto bonf = edgewise_compare(g.a, g.b, 12, Correction::Bonferroni);
  const auto bh = edgewise_compare(g.a, g.b, 12, Correction::BhFdr);
  CHECK((bonf.q.array() >= bonf.p.array()).all());
  std::vector<Eigen::Index> order(bh.p.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return bh.p[x] < bh.p[y]; });
  for (std::size_t r = 1; r < order.size(); ++r) CHECK(bh.q[order[r]] >= bh.q[order[r - 1]]);
  const auto greater = edgewise_compare(g.a, g.b, 12, Correction::None, Tail::Greater);
  const auto two = edgewise_compare(g.a, g.b, 12, Correction::None);
  for (Eigen::Index k = 0; k < two.p.size(); ++k)
    if (two.t[k] > 0) CHECK(greater.p[k] == doctest::Approx(two.p[k] / 2));
}

TEST_CASE("null edgewise FDR discoveries stay at the nominal rate") {
  double fraction = 0;
  const int runs = 200;
  for (int run = 0; run < runs; ++run) {
    const auto g = simulate_groups(10, 20, 20, {}, 0.0, 100 + run);
    const auto r = edgewise_compare(g.a, g.b, 10, Correction::BhFdr);
    fraction += (r.q.array() < 0.05).cast<double>().mean();
  }
  CHECK(fraction / runs <= 0.05);
}

TEST_CASE("cluster scenarios resolve exactly") {
  for (const auto& s : {fan_scenario(), two_pair_scenario(), coarse_scenario()}) {
    CAPTURE(s.name);
    CHECK(cluster_set(edge_components(s.size(), s.effects)) == cluster_set(s.expected_nbs));
    CHECK(cluster_set(pairwise_clusters(s.effects, s.adjacency())) ==
          cluster_set(s.expected_spc));

    // The same clusters from simulated groups with the effect edges shifted.
    const auto g = simulate_groups(s.size(), 20, 20, s.effects, 5.0, 4);
    const ComponentOptions opt{.t_threshold = 4.5, .permutations = 200, .seed = 5};
    const auto n = nbs(g.a, g.b, s.size(), opt);
    const auto p = spc(g.a, g.b, s.size(), s.adjacency(), opt);
    CHECK(cluster_set(n) == cluster_set(s.expected_nbs));
    CHECK(cluster_set(p) == cluster_set(s.expected_spc));
    for (const auto& c : n.clusters) CHECK(c.p_fwe < 0.05);
  }
}

TEST_CASE("pairwise neighbour rule") {
  const NodeAdjacency adj(5, {{0, 1}, {2, 3}});
  CHECK(pairwise_neighbors({0, 2}, {1, 3}, adj));
  CHECK(pairwise_neighbors({0, 2}, {3, 1}, adj));
  CHECK(pairwise_neighbors({0, 2}, {0, 3}, adj));
  CHECK_FALSE(pairwise_neighbors({0, 2}, {2, 4}, adj));
  CHECK_FALSE(pairwise_neighbors({0, 2}, {0, 4}, adj));
  CHECK(adj.near(4, 4));

  Eigen::Matrix3Xd xyz(3, 3);
  xyz << 0, 1, 5, 0, 0, 0, 0, 0, 0;
  const auto coord = NodeAdjacency::from_coordinates(xyz, 1.0);
  CHECK(coord.near(0, 1));
  CHECK_FALSE(coord.near(1, 2));
  CHECK_THROWS_AS(pairwise_clusters({{0, 1}}, NodeAdjacency()), ValidationError);
}

TEST_CASE("an isolated strong edge is a component of size one") {
  const auto g = simulate_groups(8, 20, 20, {{1, 6}}, 10.0, 6);
  const auto r = nbs(g.a, g.b, 8, {.t_threshold = 5.0, .permutations = 100, .seed = 1});
  REQUIRE(r.clusters.size() == 1);
  CHECK(r.clusters[0].size == 1);
  CHECK(r.clusters[0].edges == std::vector<Edge>{{1, 6}});
  CHECK(r.null_max.size() == 100);

  const auto empty = nbs(g.a, g.b, 8, {.t_threshold = 100.0, .permutations = 100, .seed = 1});
  CHECK(empty.clusters.empty());
  CHECK_THROWS_AS(nbs(g.a, g.b, 8, {.permutations = 99}), ValidationError);
}

TEST_CASE("component inference is reproducible and scale invariant") {
  const std::vector<Edge> effect{{0, 1}, {1, 2}, {2, 3}, {3, 4}};
  const auto g = simulate_groups(12, 15, 15, effect, 1.2, 7);
  const ComponentOptions opt{.t_threshold = 2.0, .permutations = 300, .seed = 9};
  const auto r = nbs(g.a, g.b, 12, opt);
  const auto again = nbs(g.a, g.b, 12, opt);
  const auto scaled = nbs(Eigen::MatrixXd(3.7 * g.a), Eigen::MatrixXd(3.7 * g.b), 12, opt);
  REQUIRE_FALSE(r.clusters.empty());
  CHECK(r.null_max == again.null_max);
  CHECK(r.null_max == scaled.null_max);
  CHECK(cluster_set(r) == cluster_set(scaled));
  CHECK(r.t.isApprox(scaled.t, 1e-12));
  for (std::size_t c = 0; c < r.clusters.size(); ++c) {
    const double p = r.clusters[c].p_fwe;
    CHECK(p == scaled.clusters[c].p_fwe);
    const double b = p * (opt.permutations + 1) - 1;
    CHECK(b == doctest::Approx(std::round(b)));
    CHECK(p >= 1.0 / (opt.permutations + 1));
    CHECK(p <= 1.0);
  }
  // Clusters are edge-disjoint and supra-threshold.
  std::set<Edge> seen;
  const auto pairs = edge_pairs(12);
  for (const auto& c : r.clusters)
    for (const auto& e : c.edges) {
      CHECK(seen.insert(e).second);
      const auto k = std::find(pairs.begin(), pairs.end(), e) - pairs.begin();
      CHECK(std::abs(r.t[k]) > opt.t_threshold);
    }
}

TEST_CASE("spc clusters lie inside components once adjacency links are added") {
  // Pairwise neighbours need not share an endpoint, so an spc cluster can
  // span two nbs components.
  const NodeAdjacency pair_adj(4, {{0, 1}, {2, 3}});
  CHECK(cluster_set(pairwise_clusters({{0, 2}, {1, 3}}, pair_adj)).size() == 1);
  CHECK(edge_components(4, {{0, 2}, {1, 3}}).size() == 2);

  Eigen::Matrix3Xd xyz = Eigen::Matrix3Xd::Zero(3, 16);
  for (int v = 0; v < 16; ++v) xyz.col(v) << v % 4, v / 4, 0;
  const auto adj = NodeAdjacency::from_coordinates(xyz, 1.0);
  std::vector<Edge> links;
  for (int i = 0; i < 16; ++i)
    for (int j = i + 1; j < 16; ++j)
      if (adj.near(i, j)) links.push_back({i, j});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = simulate_groups(16, 12, 12, {{0, 5}, {1, 5}, {1, 6}, {4, 9}}, 1.5, 20 + seed);
    const ComponentOptions opt{.t_threshold = 1.8, .permutations = 100, .seed = seed};
    const auto n = nbs(g.a, g.b, 16, opt);
    const auto p = spc(g.a, g.b, 16, adj, opt);
    std::vector<Edge> joined = links;
    for (const auto& c : n.clusters) joined.insert(joined.end(), c.edges.begin(), c.edges.end());
    std::sort(joined.begin(), joined.end());
    joined.erase(std::unique(joined.begin(), joined.end()), joined.end());
    const auto comps = edge_components(16, joined);
    for (const auto& c : p.clusters) {
      CHECK(c.size >= 2);
      bool contained = false;
      for (const auto& comp : comps)
        contained |= std::includes(comp.begin(), comp.end(), c.edges.begin(), c.edges.end());
      CHECK(contained);
      // Every spc edge is an nbs edge.
      for (const auto& e : c.edges) {
        bool found = false;
        for (const auto& comp : n.clusters)
          found |= std::binary_search(comp.edges.begin(), comp.edges.end(), e);
        CHECK(found);
      }
    }
  }
  // On the hand-built scenarios the plain inclusion holds.
  for (const auto& s : {fan_scenario(), two_pair_scenario(), coarse_scenario()})
    for (const auto& c : s.expected_spc) {
      bool contained = false;
      for (const auto& comp : s.expected_nbs)
        contained |= std::includes(comp.begin(), comp.end(), c.begin(), c.end());
      CHECK(contained);
    }
}

TEST_CASE("null component inference controls the family-wise error") {
  int nbs_hits = 0, spc_hits = 0;
  Eigen::Matrix3Xd xyz = Eigen::Matrix3Xd::Zero(3, 10);
  for (int v = 0; v < 10; ++v) xyz.col(v) << v, 0, 0;
  const auto adj = NodeAdjacency::from_coordinates(xyz, 1.0);
  const int runs = 200;
  for (int run = 0; run < runs; ++run) {
    const auto g = simulate_groups(10, 12, 12, {}, 0.0, 500 + run);
    const ComponentOptions opt{.t_threshold = 2.0, .permutations = 100, .seed = 7u + run};
    const auto n = nbs(g.a, g.b, 10, opt);
    const auto p = spc(g.a, g.b, 10, adj, opt);
    nbs_hits += !n.clusters.empty() && n.clusters.front().p_fwe < 0.05;
    spc_hits += !p.clusters.empty() && p.clusters.front().p_fwe < 0.05;
  }
  CHECK(nbs_hits <= 0.07 * runs);
  CHECK(spc_hits <= 0.07 * runs);
}
