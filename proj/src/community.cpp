#include "fcnet/community.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "fcnet/error.hpp"
#include "fcnet/graph.hpp"
#include "fcnet/parallel.hpp"
#include "fcnet/random.hpp"

namespace fcnet {

std::vector<int> canonical_labels(const std::vector<int>& assignment) {
  std::map<int, int> remap;
  std::vector<int> out(assignment.size());
  for (std::size_t v = 0; v < assignment.size(); ++v) {
    const auto [it, inserted] = remap.try_emplace(assignment[v], static_cast<int>(remap.size()));
    out[v] = it->second;
  }
  return out;
}

namespace {

void check_assignment(int n, const std::vector<int>& assignment) {
  if (assignment.size() != static_cast<std::size_t>(n))
    throw ValidationError("partition covers " + std::to_string(assignment.size()) +
                          " nodes but the graph has " + std::to_string(n));
  for (std::size_t v = 0; v < assignment.size(); ++v)
    if (assignment[v] < 0)
      throw ValidationError("node " + std::to_string(v) + " has no community");
}

double modularity_of(int n, const std::vector<WeightedEdge>& edges,
                     const std::vector<int>& assignment) {
  check_assignment(n, assignment);
  const auto labels = canonical_labels(assignment);
  const int count = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<double> within(count, 0.0), ends(count, 0.0);
  double total = 0.0;
  for (const auto& e : edges) {
    total += e.weight;
    ends[labels[e.i]] += e.weight;
    ends[labels[e.j]] += e.weight;
    if (labels[e.i] == labels[e.j]) within[labels[e.i]] += e.weight;
  }
  if (total <= 0.0) throw UndefinedMetric("modularity of an edgeless graph");
  double q = 0.0;
  for (int c = 0; c < count; ++c) {
    const double a = ends[c] / (2.0 * total);
    q += within[c] / total - a * a;
  }
  return q;
}

std::vector<WeightedEdge> unit_edges(const BinaryNetwork& g) {
  std::vector<WeightedEdge> out;
  out.reserve(g.edge_count());
  for (const auto& e : g.edges()) out.push_back({e.i, e.j, 1.0});
  return out;
}

// One level of the Louvain hierarchy. Self-loop weight counts once in
// `loops` and twice in the node strength.
struct Level {
  struct Arc {
    int node;
    double weight;
  };
  int n = 0;
  std::vector<std::vector<Arc>> adj;  // excludes self-loops
  std::vector<double> loops;
  std::vector<double> strength;
};

Level initial_level(int n, const std::vector<WeightedEdge>& edges) {
  Level lv{n, std::vector<std::vector<Level::Arc>>(n), std::vector<double>(n, 0.0),
           std::vector<double>(n, 0.0)};
  for (const auto& e : edges) {
    lv.adj[e.i].push_back({e.j, e.weight});
    lv.adj[e.j].push_back({e.i, e.weight});
    lv.strength[e.i] += e.weight;
    lv.strength[e.j] += e.weight;
  }
  return lv;
}

// Local moving phase; returns the community per level node and whether any
// node moved.
std::pair<std::vector<int>, bool> local_moves(const Level& lv, double two_m, Rng& rng) {
  std::vector<int> comm(lv.n);
  std::iota(comm.begin(), comm.end(), 0);
  std::vector<double> tot = lv.strength;
  std::vector<int> order(lv.n);
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);

  std::vector<double> link(lv.n, 0.0);
  std::vector<int> touched;
  bool any = false, moved = true;
  while (moved) {
    moved = false;
    for (int i : order) {
      const int own = comm[i];
      const double k = lv.strength[i];
      touched.clear();
      for (const auto& a : lv.adj[i]) {
        if (link[comm[a.node]] == 0.0) touched.push_back(comm[a.node]);
        link[comm[a.node]] += a.weight;
      }
      tot[own] -= k;
      // Gain of joining c, up to a factor common to all c.
      auto gain = [&](int c) { return link[c] - tot[c] * k / two_m; };
      const double stay = gain(own);
      int best = own;
      double best_gain = stay;
      for (int c : touched)
        if (c != own && gain(c) > best_gain + 1e-12) {
          best = c;
          best_gain = gain(c);
        }
      tot[best] += k;
      comm[i] = best;
      if (best != own) moved = any = true;
      for (int c : touched) link[c] = 0.0;
      link[own] = 0.0;
    }
  }
  return {canonical_labels(comm), any};
}

Level aggregate(const Level& lv, const std::vector<int>& comm) {
  const int count = *std::max_element(comm.begin(), comm.end()) + 1;
  Level out{count, std::vector<std::vector<Level::Arc>>(count), std::vector<double>(count, 0.0),
            std::vector<double>(count, 0.0)};
  std::vector<std::map<int, double>> between(count);
  for (int v = 0; v < lv.n; ++v) {
    out.loops[comm[v]] += lv.loops[v];
    out.strength[comm[v]] += lv.strength[v];
    for (const auto& a : lv.adj[v]) {
      if (comm[a.node] == comm[v]) {
        if (a.node > v) out.loops[comm[v]] += a.weight;
      } else {
        between[comm[v]][comm[a.node]] += a.weight;
      }
    }
  }
  for (int c = 0; c < count; ++c)
    for (const auto& [d, w] : between[c]) out.adj[c].push_back({d, w});
  return out;
}

Partition louvain_impl(int n, const std::vector<WeightedEdge>& edges, std::uint64_t seed) {
  if (edges.empty()) throw ValidationError("louvain needs at least one edge");
  double two_m = 0.0;
  for (const auto& e : edges) two_m += 2.0 * e.weight;
  Rng rng(seed);
  Level lv = initial_level(n, edges);
  std::vector<int> membership(n);
  std::iota(membership.begin(), membership.end(), 0);
  for (;;) {
    const auto [comm, moved] = local_moves(lv, two_m, rng);
    if (!moved) break;
    for (auto& m : membership) m = comm[m];
    lv = aggregate(lv, comm);
  }
  Partition p;
  p.assignment = canonical_labels(membership);
  p.community_count = *std::max_element(p.assignment.begin(), p.assignment.end()) + 1;
  p.modularity = modularity_of(n, edges, p.assignment);
  return p;
}

LouvainRuns runs_impl(int n, const std::vector<WeightedEdge>& edges, int runs,
                      std::uint64_t seed) {
  if (runs < 1) throw ValidationError("louvain_runs needs at least one run");
  LouvainRuns out;
  out.runs.resize(runs);
  parallel_for(static_cast<std::size_t>(runs), [&](std::size_t r) {
    out.runs[r] = louvain_impl(n, edges, derive_seed(seed, r));
  });
  out.agreement = Eigen::MatrixXd::Ones(runs, runs);
  for (int a = 0; a < runs; ++a) {
    for (int b = a + 1; b < runs; ++b)
      out.agreement(a, b) = out.agreement(b, a) =
          normalized_mutual_information(out.runs[a].assignment, out.runs[b].assignment);
    if (out.runs[a].modularity > out.runs[out.best].modularity) out.best = a;
  }
  return out;
}

}  // namespace

double modularity(const BinaryNetwork& g, const std::vector<int>& assignment) {
  return modularity_of(g.size(), unit_edges(g), assignment);
}

double modularity(const WeightedNetwork& g, const std::vector<int>& assignment) {
  return modularity_of(g.size(), g.edges(), assignment);
}

Partition louvain(const BinaryNetwork& g, std::uint64_t seed) {
  return louvain_impl(g.size(), unit_edges(g), seed);
}

Partition louvain(const WeightedNetwork& g, std::uint64_t seed) {
  return louvain_impl(g.size(), g.edges(), seed);
}

LouvainRuns louvain_runs(const BinaryNetwork& g, int runs, std::uint64_t seed) {
  return runs_impl(g.size(), unit_edges(g), runs, seed);
}

LouvainRuns louvain_runs(const WeightedNetwork& g, int runs, std::uint64_t seed) {
  return runs_impl(g.size(), g.edges(), runs, seed);
}

double normalized_mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw ShapeError("partitions differ in length");
  const auto la = canonical_labels(a), lb = canonical_labels(b);
  const double n = static_cast<double>(a.size());
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pa, pb;
  for (std::size_t v = 0; v < a.size(); ++v) {
    joint[{la[v], lb[v]}] += 1.0;
    pa[la[v]] += 1.0;
    pb[lb[v]] += 1.0;
  }
  auto entropy = [n](const std::map<int, double>& p) {
    double h = 0.0;
    for (const auto& [k, c] : p) h -= c / n * std::log(c / n);
    return h;
  };
  const double ha = entropy(pa), hb = entropy(pb);
  if (ha + hb == 0.0) return 1.0;
  double info = 0.0;
  for (const auto& [key, c] : joint)
    info += c / n * std::log(c * n / (pa[key.first] * pb[key.second]));
  return 2.0 * info / (ha + hb);
}

GirvanNewmanResult girvan_newman(const BinaryNetwork& g, int max_communities) {
  if (g.size() > kGirvanNewmanMaxNodes)
    throw ValidationError("girvan_newman is limited to " + std::to_string(kGirvanNewmanMaxNodes) +
                          " nodes; use louvain for larger networks");
  if (g.edge_count() == 0) throw ValidationError("girvan_newman needs at least one edge");
  GirvanNewmanResult out;
  auto consider = [&](const std::vector<int>& labels) {
    const int count = *std::max_element(labels.begin(), labels.end()) + 1;
    if (max_communities > 0 && count > max_communities) return;
    const double q = modularity(g, labels);
    if (out.best.assignment.empty() || q > out.best.modularity + 1e-12)
      out.best = {labels, count, q};
  };
  auto labels = connected_components(g);
  consider(labels);
  int components = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<Edge> remaining = g.edges();
  while (!remaining.empty()) {
    const BinaryNetwork current(g.size(), remaining);
    const auto eb = edge_betweenness(current);
    std::size_t pick = 0;
    for (std::size_t k = 1; k < eb.size(); ++k)
      if (eb[k] > eb[pick] * (1.0 + 1e-12)) pick = k;
    out.removed.push_back(remaining[pick]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
    labels = connected_components(BinaryNetwork(g.size(), remaining));
    const int now = *std::max_element(labels.begin(), labels.end()) + 1;
    if (now > components) {
      components = now;
      consider(labels);
    }
  }
  if (out.best.assignment.empty())
    throw InfeasibleError("no component partition has at most " +
                          std::to_string(max_communities) + " communities");
  return out;
}

std::string to_string(Role role) {
  return "R" + std::to_string(static_cast<int>(role) + 1);
}

Role classify_role(double z, double p, const RoleThresholds& cuts) {
  if (z >= cuts.hub_z) {
    if (p <= cuts.provincial_hub) return Role::R5;
    if (p <= cuts.connector_hub) return Role::R6;
    return Role::R7;
  }
  if (p <= cuts.ultra_peripheral) return Role::R1;
  if (p <= cuts.peripheral) return Role::R2;
  if (p <= cuts.connector) return Role::R3;
  return Role::R4;
}

std::vector<NodeRole> cartography(const BinaryNetwork& g, const std::vector<int>& assignment,
                                  const RoleThresholds& cuts) {
  check_assignment(g.size(), assignment);
  const auto labels = canonical_labels(assignment);
  const int n = g.size();
  const int count = n ? *std::max_element(labels.begin(), labels.end()) + 1 : 0;
  std::vector<double> within(n, 0.0);
  std::vector<double> participation(n, 0.0);
  std::vector<double> per(count, 0.0);
  for (int v = 0; v < n; ++v) {
    std::fill(per.begin(), per.end(), 0.0);
    for (int w : g.neighbors(v)) per[labels[w]] += 1.0;
    within[v] = per[labels[v]];
    const double k = g.degrees()[v];
    if (k > 0) {
      double s = 0.0;
      for (double c : per) s += (c / k) * (c / k);
      participation[v] = 1.0 - s;
    }
  }
  std::vector<double> sum(count, 0.0), sum_sq(count, 0.0), size(count, 0.0);
  for (int v = 0; v < n; ++v) {
    sum[labels[v]] += within[v];
    sum_sq[labels[v]] += within[v] * within[v];
    size[labels[v]] += 1.0;
  }
  std::vector<NodeRole> out(n);
  for (int v = 0; v < n; ++v) {
    const int c = labels[v];
    const double mu = sum[c] / size[c];
    const double var = std::max(0.0, sum_sq[c] / size[c] - mu * mu);
    const double sd = std::sqrt(var);
    NodeRole r;
    r.node = v;
    r.singleton_community = size[c] == 1.0;
    r.within_module_z = sd > 1e-12 ? (within[v] - mu) / sd : 0.0;
    r.participation = participation[v];
    r.role = classify_role(r.within_module_z, r.participation, cuts);
    out[v] = r;
  }
  return out;
}

}  // namespace fcnet
