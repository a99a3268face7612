#include "fcnet/threshold.hpp"

#include <algorithm>
#include <numeric>

namespace fcnet {

NegativePolicy parse_negative_policy(const std::string& text) {
  if (text == "drop") return NegativePolicy::Drop;
  if (text == "absolute") return NegativePolicy::Absolute;
  throw ValidationError("unknown negative policy '" + text + "'");
}

namespace {

struct Candidate {
  double value;
  Edge edge;
};

// Pairs that survive the negative policy, strongest first, ties lexicographic.
std::vector<Candidate> ranked_candidates(const ConnectionMatrix& cm, NegativePolicy policy) {
  cm.validate();
  std::vector<Candidate> out;
  const auto n = static_cast<int>(cm.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double raw = cm.values(i, j);
      const double v = policy == NegativePolicy::Absolute ? std::abs(raw) : raw;
      if (v > 0.0) out.push_back({v, {i, j}});
    }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.value > b.value; });
  return out;
}

std::string policy_name(NegativePolicy p) { return p == NegativePolicy::Drop ? "drop" : "absolute"; }

BinaryNetwork top_edges(const ConnectionMatrix& cm, std::size_t count, NegativePolicy policy) {
  const auto n = static_cast<int>(cm.size());
  const std::size_t possible = static_cast<std::size_t>(n) * (n - 1) / 2;
  if (count > possible)
    throw InfeasibleError("requested " + std::to_string(count) + " edges but only " +
                          std::to_string(possible) + " pairs exist");
  const auto ranked = ranked_candidates(cm, policy);
  if (count > ranked.size())
    throw InfeasibleError("requested " + std::to_string(count) + " edges but only " +
                          std::to_string(ranked.size()) + " pairs are positive under the '" +
                          policy_name(policy) + "' policy");
  std::vector<Edge> edges;
  edges.reserve(count);
  for (std::size_t k = 0; k < count; ++k) edges.push_back(ranked[k].edge);
  return BinaryNetwork(n, std::move(edges));
}

}  // namespace

BinaryNetwork apply_fixed_threshold(const ConnectionMatrix& cm, const FixedCriterion& criterion,
                                    NegativePolicy policy) {
  const auto n = static_cast<int>(cm.size());
  const auto ranked = ranked_candidates(cm, policy);
  std::vector<Edge> edges;
  Provenance provenance;
  provenance.params["absolute_negatives"] = policy == NegativePolicy::Absolute;

  if (const auto* value = std::get_if<ValueThreshold>(&criterion)) {
    for (const auto& c : ranked)
      if (c.value > value->tau) edges.push_back(c.edge);
    provenance.strategy = "value";
    provenance.params["tau"] = value->tau;
  } else if (const auto* sig = std::get_if<SignificanceThreshold>(&criterion)) {
    if (!is_correlation_family(cm.measure))
      throw ValidationError("significance thresholding requires a correlation-family matrix");
    if (sig->series_length <= 3) throw ValidationError("significance thresholding needs T > 3");
    const double df = static_cast<double>(sig->series_length - 2);
    const std::size_t pairs = static_cast<std::size_t>(n) * (n - 1) / 2;
    Eigen::VectorXd p(static_cast<Eigen::Index>(pairs));
    std::vector<Edge> pair_of(pairs);
    std::size_t k = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++k) {
        const double r = cm.values(i, j);
        const double t = r * std::sqrt(df / std::max(0.0, 1.0 - r * r));
        p[static_cast<Eigen::Index>(k)] = student_t_pvalue(t, df, Tail::TwoSided);
        pair_of[k] = {i, j};
      }
    const Eigen::VectorXd q = adjust_pvalues(p, sig->correction);
    for (std::size_t m = 0; m < pairs; ++m) {
      const double r = cm.values(pair_of[m].i, pair_of[m].j);
      if (policy == NegativePolicy::Drop && !(r > 0.0)) continue;
      if (q[static_cast<Eigen::Index>(m)] < sig->alpha) edges.push_back(pair_of[m]);
    }
    provenance.strategy = "significance";
    provenance.params["alpha"] = sig->alpha;
    provenance.params["series_length"] = static_cast<double>(sig->series_length);
    provenance.params["correction"] = static_cast<double>(sig->correction);
  } else {
    // Kruskal on the strongest pairs until one component remains.
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int v) {
      while (parent[v] != v) v = parent[v] = parent[parent[v]];
      return v;
    };
    int components = n;
    double bottleneck = 0.0;
    for (const auto& c : ranked) {
      if (components <= 1) break;
      const int a = find(c.edge.i), b = find(c.edge.j);
      if (a != b) {
        parent[a] = b;
        --components;
        bottleneck = c.value;
      }
    }
    if (components > 1)
      throw InfeasibleError("no threshold connects all nodes: some node has no positive entry "
                            "under the '" + policy_name(policy) + "' policy");
    for (const auto& c : ranked)
      if (n > 1 && c.value >= bottleneck) edges.push_back(c.edge);
    provenance.strategy = "min_connected";
    provenance.params["tau"] = bottleneck;
  }
  BinaryNetwork g(n, std::move(edges));
  g.provenance = std::move(provenance);
  return g;
}

std::size_t edges_for_mean_degree(int n, double k_target) {
  if (!(k_target > 0.0)) throw DomainError("target mean degree must be positive");
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * k_target / 2.0));
}

BinaryNetwork apply_fixed_degree(const ConnectionMatrix& cm, double k_target,
                                 NegativePolicy policy) {
  const auto n = static_cast<int>(cm.size());
  auto g = top_edges(cm, edges_for_mean_degree(n, k_target), policy);
  g.provenance.strategy = "fixed_degree";
  g.provenance.params["k"] = k_target;
  return g;
}

BinaryNetwork apply_fixed_density(const ConnectionMatrix& cm,
                                  const std::variant<DensityTarget, PathExponentTarget>& target,
                                  NegativePolicy policy) {
  const auto n = static_cast<int>(cm.size());
  if (const auto* d = std::get_if<DensityTarget>(&target)) {
    if (!(d->density >= 0.0 && d->density <= 1.0))
      throw InfeasibleError("density must lie in [0, 1]");
    const double pairs = static_cast<double>(n) * (n - 1) / 2.0;
    auto g = top_edges(cm, static_cast<std::size_t>(std::llround(d->density * pairs)), policy);
    g.provenance.strategy = "density";
    g.provenance.params["density"] = d->density;
    return g;
  }
  const double s = std::get<PathExponentTarget>(target).exponent;
  if (!(s > 1.0)) throw InfeasibleError("path exponent S must exceed 1");
  const double k = std::pow(static_cast<double>(n), 1.0 / s);
  if (!(k < n)) throw InfeasibleError("mean degree n^(1/S) must be below n");
  auto g = apply_fixed_degree(cm, k, policy);
  g.provenance.strategy = "path_exponent";
  g.provenance.params["S"] = s;
  g.provenance.params["k"] = k;
  return g;
}

WeightedNetwork weighted_network(const ConnectionMatrix& cm, WeightPolicy policy, double tau) {
  cm.validate();
  const auto n = static_cast<int>(cm.size());
  std::vector<WeightedEdge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double raw = cm.values(i, j);
      double w = 0.0;
      switch (policy) {
        case WeightPolicy::KeepPositive: w = raw; break;
        case WeightPolicy::Absolute: w = std::abs(raw); break;
        case WeightPolicy::ThresholdThenKeep: w = raw > tau ? raw : 0.0; break;
      }
      if (w > 0.0) edges.push_back({i, j, w});
    }
  if (edges.empty()) throw InfeasibleError("weighting policy eliminated every edge");
  WeightedNetwork g(n, std::move(edges));
  g.provenance.strategy = policy == WeightPolicy::KeepPositive ? "keep_positive"
                          : policy == WeightPolicy::Absolute   ? "absolute"
                                                               : "threshold_then_keep";
  if (policy == WeightPolicy::ThresholdThenKeep) g.provenance.params["tau"] = tau;
  return g;
}

std::string to_string(ThresholdStrategy s) {
  switch (s) {
    case ThresholdStrategy::Value: return "value";
    case ThresholdStrategy::Significance: return "significance";
    case ThresholdStrategy::MinConnected: return "min_connected";
    case ThresholdStrategy::FixedDegree: return "fixed_degree";
    case ThresholdStrategy::FixedDensity: return "fixed_density";
    case ThresholdStrategy::PathExponent: return "path_exponent";
  }
  return "unknown";
}

ThresholdStrategy parse_threshold_strategy(const std::string& text) {
  for (auto s : {ThresholdStrategy::Value, ThresholdStrategy::Significance,
                 ThresholdStrategy::MinConnected, ThresholdStrategy::FixedDegree,
                 ThresholdStrategy::FixedDensity, ThresholdStrategy::PathExponent})
    if (text == to_string(s)) return s;
  throw ValidationError("unknown threshold strategy '" + text + "'");
}

BinaryNetwork apply_threshold(const ConnectionMatrix& cm, const ThresholdSpec& spec,
                              Eigen::Index series_length) {
  switch (spec.strategy) {
    case ThresholdStrategy::Value:
      return apply_fixed_threshold(cm, ValueThreshold{spec.tau}, spec.negative);
    case ThresholdStrategy::Significance:
      return apply_fixed_threshold(
          cm, SignificanceThreshold{spec.alpha, spec.correction, series_length}, spec.negative);
    case ThresholdStrategy::MinConnected:
      return apply_fixed_threshold(cm, MinConnected{}, spec.negative);
    case ThresholdStrategy::FixedDegree: return apply_fixed_degree(cm, spec.k, spec.negative);
    case ThresholdStrategy::FixedDensity:
      return apply_fixed_density(cm, DensityTarget{spec.density}, spec.negative);
    case ThresholdStrategy::PathExponent:
      return apply_fixed_density(cm, PathExponentTarget{spec.exponent}, spec.negative);
  }
  throw ValidationError("unknown threshold strategy");
}

}  // namespace fcnet
