#include "fcnet/ergm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <Eigen/Cholesky>

#include "fcnet/diagnostics.hpp"
#include "fcnet/error.hpp"
#include "fcnet/parallel.hpp"
#include "fcnet/random.hpp"
#include "fcnet/stats.hpp"

namespace fcnet {

namespace {

// A logistic coefficient this large means the fitted odds run off to 0 or
// infinity, which only happens when some statistic separates the dyads.
constexpr double kSeparationTheta = 30.0;

/// Mutable dense adjacency used by the change statistics and the sampler.
struct DenseGraph {
  int n = 0;
  std::vector<char> adj;
  std::vector<int> degree;
  long edges = 0;

  explicit DenseGraph(int nodes)
      : n(nodes), adj(static_cast<std::size_t>(nodes) * nodes, 0), degree(nodes, 0) {}
  explicit DenseGraph(const BinaryNetwork& g) : DenseGraph(g.size()) {
    for (const auto& e : g.edges()) toggle(e.i, e.j);
  }

  bool has(int i, int j) const { return adj[static_cast<std::size_t>(i) * n + j] != 0; }

  void toggle(int i, int j) {
    const char now = has(i, j) ? 0 : 1;
    adj[static_cast<std::size_t>(i) * n + j] = adj[static_cast<std::size_t>(j) * n + i] = now;
    const int step = now ? 1 : -1;
    degree[i] += step;
    degree[j] += step;
    edges += step;
  }

  int common_neighbors(int i, int j) const {
    const char* a = &adj[static_cast<std::size_t>(i) * n];
    const char* b = &adj[static_cast<std::size_t>(j) * n];
    int c = 0;
    for (int k = 0; k < n; ++k) c += a[k] & b[k];
    return c;
  }

  BinaryNetwork snapshot() const {
    std::vector<Edge> e;
    e.reserve(static_cast<std::size_t>(edges));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (has(i, j)) e.push_back({i, j});
    return BinaryNetwork(n, e);
  }
};

// Change statistics do not depend on the dyad's own state.
void change_stats(const DenseGraph& g, int i, int j, const ErgmSpec& spec,
                  Eigen::Ref<Eigen::VectorXd> out) {
  const int own = g.has(i, j) ? 1 : 0;
  Eigen::Index k = 0;
  for (auto term : spec.terms) {
    switch (term) {
      case ErgmTerm::Edges: out[k] = 1; break;
      case ErgmTerm::TwoStars: out[k] = g.degree[i] + g.degree[j] - 2 * own; break;
      case ErgmTerm::Triangles: out[k] = g.common_neighbors(i, j); break;
    }
    ++k;
  }
  for (const auto& x : spec.dyadic_covariates) out[k++] = x(std::min(i, j), std::max(i, j));
}

double log1p_exp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double pseudo_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double ll = 0;
  for (Eigen::Index r = 0; r < eta.size(); ++r) ll += y[r] * eta[r] - log1p_exp(eta[r]);
  return ll;
}

}  // namespace

std::string to_string(ErgmTerm term) {
  switch (term) {
    case ErgmTerm::Edges: return "edges";
    case ErgmTerm::TwoStars: return "two_stars";
    case ErgmTerm::Triangles: return "triangles";
  }
  return "";
}

ErgmTerm parse_ergm_term(const std::string& text) {
  if (text == "edges") return ErgmTerm::Edges;
  if (text == "two_stars") return ErgmTerm::TwoStars;
  if (text == "triangles") return ErgmTerm::Triangles;
  throw ValidationError("unknown ERGM term '" + text + "'");
}

void ErgmSpec::validate(int n) const {
  if (std::find(terms.begin(), terms.end(), ErgmTerm::Edges) == terms.end())
    throw ValidationError("an ERGM needs the edges term");
  for (std::size_t a = 0; a < terms.size(); ++a)
    for (std::size_t b = a + 1; b < terms.size(); ++b)
      if (terms[a] == terms[b]) throw ValidationError("repeated ERGM term " + to_string(terms[a]));
  if (n < 0) return;
  for (const auto& x : dyadic_covariates)
    if (x.rows() != n || x.cols() != n)
      throw ShapeError("dyadic covariate must be " + std::to_string(n) + " x " + std::to_string(n));
}

Eigen::VectorXd ergm_stats(const BinaryNetwork& g, const ErgmSpec& spec) {
  spec.validate(g.size());
  Eigen::VectorXd s = Eigen::VectorXd::Zero(spec.dimension());
  Eigen::Index k = 0;
  for (auto term : spec.terms) {
    switch (term) {
      case ErgmTerm::Edges: s[k] = static_cast<double>(g.edge_count()); break;
      case ErgmTerm::TwoStars:
        for (int d : g.degrees()) s[k] += 0.5 * d * (d - 1.0);
        break;
      case ErgmTerm::Triangles: {
        const DenseGraph dense(g);
        double closed = 0;
        for (const auto& e : g.edges()) closed += dense.common_neighbors(e.i, e.j);
        s[k] = closed / 3;
        break;
      }
    }
    ++k;
  }
  for (const auto& x : spec.dyadic_covariates) {
    for (const auto& e : g.edges()) s[k] += x(e.i, e.j);
    ++k;
  }
  return s;
}

Eigen::VectorXd ergm_change_stats(const BinaryNetwork& g, int i, int j, const ErgmSpec& spec) {
  spec.validate(g.size());
  if (i == j) throw DomainError("a dyad needs two distinct nodes");
  if (i < 0 || j < 0 || i >= g.size() || j >= g.size()) throw ShapeError("dyad out of range");
  Eigen::VectorXd out(spec.dimension());
  change_stats(DenseGraph(g), i, j, spec, out);
  return out;
}

ErgmFit ergm_mple(const BinaryNetwork& g, const ErgmSpec& spec, const MpleOptions& options) {
  spec.validate(g.size());
  const int n = g.size();
  const long dyads = static_cast<long>(n) * (n - 1) / 2;
  if (g.edge_count() == 0 || static_cast<long>(g.edge_count()) == dyads)
    throw ValidationError("MPLE needs a graph that is neither empty nor complete");

  const DenseGraph dense(g);
  const Eigen::Index p = spec.dimension();
  Eigen::MatrixXd x(dyads, p);
  Eigen::VectorXd y(dyads);
  Eigen::VectorXd row(p);
  Eigen::Index r = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j, ++r) {
      change_stats(dense, i, j, spec, row);
      x.row(r) = row.transpose();
      y[r] = dense.has(i, j) ? 1.0 : 0.0;
    }

  ErgmFit fit;
  fit.spec = spec;
  fit.theta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = x * fit.theta;
  double ll = pseudo_loglik(eta, y);
  Eigen::MatrixXd info(p, p);
  for (fit.iterations = 0; fit.iterations <= options.max_iterations; ++fit.iterations) {
    Eigen::VectorXd mu(dyads), w(dyads);
    for (Eigen::Index d = 0; d < dyads; ++d) {
      mu[d] = inv_logit(eta[d]);
      w[d] = mu[d] * (1 - mu[d]);
    }
    const Eigen::VectorXd grad = x.transpose() * (y - mu);
    info = x.transpose() * w.asDiagonal() * x;
    if (grad.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      fit.converged = true;
      break;
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    const double scale = info.diagonal().maxCoeff();
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-13 * scale)
      throw ConvergenceError(
          "MPLE information matrix is singular; the change statistics are collinear or "
          "separate the dyads");
    const Eigen::VectorXd step = ldlt.solve(grad);
    double t = 1.0;
    Eigen::VectorXd next, next_eta;
    double next_ll = 0;
    for (int half = 0; half < 40; ++half, t *= 0.5) {
      next = fit.theta + t * step;
      next_eta = x * next;
      next_ll = pseudo_loglik(next_eta, y);
      if (next_ll >= ll - 1e-12 * std::abs(ll)) break;
    }
    const bool stalled = (next - fit.theta).lpNorm<Eigen::Infinity>() <=
                         1e-14 * (1 + fit.theta.lpNorm<Eigen::Infinity>());
    fit.theta = next;
    eta = next_eta;
    ll = next_ll;
    if (fit.theta.lpNorm<Eigen::Infinity>() > kSeparationTheta)
      throw ConvergenceError("MPLE diverges (|theta| > 30): the change statistics separate "
                             "present from absent dyads");
    if (stalled) {
      // Rounding floor of the gradient reached.
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged)
    throw ConvergenceError("MPLE did not converge in " + std::to_string(options.max_iterations) +
                           " iterations");
  fit.pseudo_loglik = ll;
  fit.standard_errors =
      info.ldlt().solve(Eigen::MatrixXd::Identity(p, p)).diagonal().cwiseSqrt();
  return fit;
}

std::vector<BinaryNetwork> ergm_simulate(const ErgmModel& model, int n, int count,
                                         std::uint64_t seed, const SimulationOptions& options) {
  model.spec.validate(n);
  if (n < 2) throw ValidationError("simulation needs at least 2 nodes");
  if (count < 0) throw ValidationError("negative draw count");
  if (model.theta.size() != model.spec.dimension())
    throw ShapeError("theta length does not match the model terms");
  const long n2 = static_cast<long>(n) * n;
  const long burn_in = options.burn_in < 0 ? 10 * n2 : options.burn_in;
  const long thin = options.thin < 0 ? n2 : options.thin;
  const long dyads = static_cast<long>(n) * (n - 1) / 2;

  Rng rng = make_rng(seed, 0);
  DenseGraph g(n);
  Eigen::VectorXd delta(model.spec.dimension());
  auto propose = [&] {
    const int i = static_cast<int>(uniform_index(rng, n));
    int j = static_cast<int>(uniform_index(rng, n - 1));
    if (j >= i) ++j;
    change_stats(g, i, j, model.spec, delta);
    const double log_ratio = (g.has(i, j) ? -1.0 : 1.0) * model.theta.dot(delta);
    if (log_ratio >= 0 || uniform01(rng) < std::exp(log_ratio)) g.toggle(i, j);
  };

  long pinned = 0;
  for (long s = 0; s < burn_in; ++s) {
    propose();
    pinned += g.edges == 0 || g.edges == dyads;
  }
  if (burn_in > 0 && 2 * pinned > burn_in)
    warn("ERGM simulation looks degenerate: density stayed at 0 or 1 for " +
         std::to_string(pinned) + " of " + std::to_string(burn_in) + " burn-in steps");

  std::vector<BinaryNetwork> draws;
  draws.reserve(count);
  for (int d = 0; d < count; ++d) {
    if (d > 0)
      for (long s = 0; s < thin; ++s) propose();
    draws.push_back(g.snapshot());
  }
  return draws;
}

RepresentativeResult representative_network(const std::vector<BinaryNetwork>& group,
                                             const ErgmSpec& spec, std::uint64_t seed,
                                             const RepresentativeOptions& options) {
  if (group.size() < 2) throw ValidationError("a representative network needs at least 2 networks");
  const int n = group.front().size();
  for (const auto& g : group)
    if (g.size() != n) throw ShapeError("all networks in a group must have the same size");
  if (options.ensemble < 1) throw ValidationError("ensemble size must be positive");
  spec.validate(n);

  std::vector<Eigen::VectorXd> theta(group.size()), stats(group.size());
  std::vector<char> ok(group.size(), 0);
  std::vector<std::string> reason(group.size());
  parallel_for(group.size(), [&](std::size_t s) {
    try {
      theta[s] = ergm_mple(group[s], spec).theta;
      stats[s] = ergm_stats(group[s], spec);
      ok[s] = 1;
    } catch (const Error& e) {
      reason[s] = e.what();
    }
  });

  RepresentativeResult out{BinaryNetwork(n, {}), Eigen::VectorXd::Zero(spec.dimension()),
                           Eigen::VectorXd::Zero(spec.dimension()), {}, {}};
  int fitted = 0;
  for (std::size_t s = 0; s < group.size(); ++s) {
    if (!ok[s]) {
      out.failed.push_back(static_cast<int>(s));
      warn("representative network: subject " + std::to_string(s) + " excluded: " + reason[s]);
      continue;
    }
    out.mean_theta += theta[s];
    out.target_stats += stats[s];
    ++fitted;
  }
  if (fitted == 0) throw ConvergenceError("no subject's ERGM fit converged");
  out.mean_theta /= fitted;
  out.target_stats /= fitted;

  const auto draws =
      ergm_simulate({spec, out.mean_theta}, n, options.ensemble, seed, options.simulation);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& d : draws) {
    const Eigen::VectorXd s = ergm_stats(d, spec);
    const double dist = (s - out.target_stats).norm();
    if (dist < best) {
      best = dist;
      out.network = d;
      out.network_stats = s;
    }
  }
  return out;
}

}  // namespace fcnet
